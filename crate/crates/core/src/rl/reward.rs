use serde::{Deserialize, Serialize};

/// Continuous piecewise-linear function through `knots` (x strictly
/// increasing), held constant outside the first and last knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiecewiseLinear {
    pub knots: Vec<[f64; 2]>,
}

impl PiecewiseLinear {
    pub fn new(knots: &[[f64; 2]]) -> Self {
        Self { knots: knots.to_vec() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.knots.is_empty() {
            return Err("needs at least one knot".into());
        }
        if self.knots.iter().flatten().any(|v| !v.is_finite()) {
            return Err("knots must be finite".into());
        }
        if self.knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err("knot x values must be strictly increasing".into());
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0][0] {
            return k[0][1];
        }
        for w in k.windows(2) {
            let ([x0, y0], [x1, y1]) = (w[0], w[1]);
            if x <= x1 {
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        k[k.len() - 1][1]
    }

    /// First x where the function falls from positive to zero or below.
    /// For the comfort terms this is the acceleration bound.
    pub fn zero_crossing(&self) -> Option<f64> {
        self.knots.windows(2).find_map(|w| {
            let ([x0, y0], [x1, y1]) = (w[0], w[1]);
            (y0 > 0.0 && y1 <= 0.0).then(|| x0 + (x1 - x0) * y0 / (y0 - y1))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardConfig {
    /// Penalty added on every tick the shield is in control.
    pub adas_penalty: f64,
    /// Speed in km/h to reward.
    pub velocity_kmh: PiecewiseLinear,
    /// |lateral deviation| in m to reward.
    pub lka: PiecewiseLinear,
    /// |longitudinal acceleration| in m/s² to reward.
    pub a_lon: PiecewiseLinear,
    /// |lateral acceleration| in m/s² to reward.
    pub a_lat: PiecewiseLinear,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            adas_penalty: -25.0,
            velocity_kmh: PiecewiseLinear::new(&[
                [0.0, -1.0],
                [5.0, 0.0],
                [25.0, 1.0],
                [30.0, 1.0],
                [35.0, 0.0],
                [50.0, -1.0],
            ]),
            lka: PiecewiseLinear::new(&[[0.0, 1.0], [1.5, 0.0], [3.0, -1.0]]),
            a_lon: PiecewiseLinear::new(&[[0.0, 1.0], [5.0, 0.0], [10.0, -1.0]]),
            a_lat: PiecewiseLinear::new(&[[0.0, 1.0], [3.0, 0.0], [6.0, -1.0]]),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (f, name) in [
            (&self.velocity_kmh, "velocity_kmh"),
            (&self.lka, "lka"),
            (&self.a_lon, "a_lon"),
            (&self.a_lat, "a_lat"),
        ] {
            f.validate().map_err(|e| format!("reward.{name}: {e}"))?;
        }
        if !(self.adas_penalty <= 0.0) {
            return Err("reward.adas_penalty must be non-positive".into());
        }
        Ok(())
    }

    pub fn adas(&self, active: bool) -> f64 {
        if active {
            self.adas_penalty
        } else {
            0.0
        }
    }

    /// `v` in m/s.
    pub fn velocity(&self, v: f64) -> f64 {
        self.velocity_kmh.eval(v * 3.6)
    }

    pub fn lane_keeping(&self, dev: f64) -> f64 {
        self.lka.eval(dev.abs())
    }

    pub fn longitudinal(&self, a: f64) -> f64 {
        self.a_lon.eval(a.abs())
    }

    pub fn lateral(&self, a: f64) -> f64 {
        self.a_lat.eval(a.abs())
    }

    pub fn breakdown(&self, adas_active: bool, dev: f64, v: f64, a_lon: f64, a_lat: f64) -> RewardBreakdown {
        RewardBreakdown::from_parts(
            self.adas(adas_active),
            self.lane_keeping(dev),
            self.velocity(v),
            self.longitudinal(a_lon),
            self.lateral(a_lat),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_adas: f64,
    pub r_lka: f64,
    pub r_v: f64,
    pub r_a_lon: f64,
    pub r_a_lat: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn from_parts(r_adas: f64, r_lka: f64, r_v: f64, r_a_lon: f64, r_a_lat: f64) -> Self {
        let mut b = Self {
            r_adas,
            r_lka,
            r_v,
            r_a_lon,
            r_a_lat,
            total: 0.0,
        };
        b.total = cumulative_reward(&b);
        b
    }
}

/// Sum of the five components, always in the same order.
pub fn cumulative_reward(p: &RewardBreakdown) -> f64 {
    p.r_adas + p.r_lka + p.r_v + p.r_a_lon + p.r_a_lat
}
