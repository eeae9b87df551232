//! Named boundary-data functions for configs: the CLI and the C API build
//! closures from these; library callers usually pass closures directly.

use serde::{Deserialize, Serialize};

use crate::error::{KolmoError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    Constant { value: f64 },
    /// x_index
    Coordinate { index: usize },
    /// min(1, |x - center| / rho)
    DistanceRamp { center: Vec<f64>, rho: f64 },
    /// min(1, (|x - center| + |t - t0|^(1/2)) / rho)
    SpaceTimeRamp { center: Vec<f64>, t0: f64, rho: f64 },
    /// log |x|; harmonic in the plane away from the origin
    LogRadius,
    /// x_index^2 + 2t; caloric for the heat operator
    CaloricSquare { index: usize },
    /// exp(-t)
    ExpTimeDecay,
}

impl BoundaryData {
    fn dist(x: &[f64], c: &[f64]) -> f64 {
        x.iter()
            .zip(c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn eval_spacetime(&self, x: &[f64], t: f64) -> f64 {
        match self {
            BoundaryData::Constant { value } => *value,
            BoundaryData::Coordinate { index } => x[*index],
            BoundaryData::DistanceRamp { center, rho } => (Self::dist(x, center) / rho).min(1.0),
            BoundaryData::SpaceTimeRamp { center, t0, rho } => {
                ((Self::dist(x, center) + (t - t0).abs().sqrt()) / rho).min(1.0)
            }
            BoundaryData::LogRadius => x.iter().map(|v| v * v).sum::<f64>().sqrt().ln(),
            BoundaryData::CaloricSquare { index } => x[*index] * x[*index] + 2.0 * t,
            BoundaryData::ExpTimeDecay => (-t).exp(),
        }
    }

    /// Purely spatial evaluation; errors for inherently time-dependent data.
    pub fn eval_space(&self, x: &[f64]) -> Result<f64> {
        match self {
            BoundaryData::SpaceTimeRamp { .. }
            | BoundaryData::CaloricSquare { .. }
            | BoundaryData::ExpTimeDecay => Err(KolmoError::Config(
                "boundary data is time-dependent; use the evolution solver".to_string(),
            )),
            _ => Ok(self.eval_spacetime(x, 0.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        let c = BoundaryData::Constant { value: 3.0 };
        assert_eq!(c.eval_space(&[1.0, 2.0]).unwrap(), 3.0);

        let ramp = BoundaryData::DistanceRamp {
            center: vec![0.0, 0.0],
            rho: 2.0,
        };
        assert_eq!(ramp.eval_space(&[1.0, 0.0]).unwrap(), 0.5);
        assert_eq!(ramp.eval_space(&[5.0, 0.0]).unwrap(), 1.0);

        let cal = BoundaryData::CaloricSquare { index: 0 };
        assert_eq!(cal.eval_spacetime(&[2.0, 0.0], 0.5), 5.0);
        assert!(cal.eval_space(&[2.0, 0.0]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let d: BoundaryData =
            serde_json::from_str(r#"{"kind": "coordinate", "index": 0}"#).unwrap();
        assert_eq!(d.eval_space(&[7.0, 1.0]).unwrap(), 7.0);
    }
}
