use crate::vehicle::VehicleState;

pub const OBS_DIM: usize = 6;

/// Raw world-frame state of both vehicles: `(x_e, y_e, v_e, x_n, y_n, v_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation(pub [f64; OBS_DIM]);

pub fn observe(ego: &VehicleState<f64>, north: &VehicleState<f64>) -> Observation {
    Observation([ego.x, ego.y, ego.v, north.x, north.y, north.v])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: f64, y: f64, v: f64) -> VehicleState<f64> {
        VehicleState {
            x,
            y,
            v,
            ..Default::default()
        }
    }

    #[test]
    fn packs_in_fixed_order() {
        let o = observe(&at(0.0, 0.0, 0.0), &at(3.0, 80.0, 8.0));
        assert_eq!(o.0, [0.0, 0.0, 0.0, 3.0, 80.0, 8.0]);
        assert_ne!(observe(&at(3.0, 80.0, 8.0), &at(0.0, 0.0, 0.0)), o);
    }
}
