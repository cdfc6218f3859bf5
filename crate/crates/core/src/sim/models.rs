//! Built-in system models.

use crate::error::{Error, Result};

use super::UniformBoxSpec;

/// A deterministic vector field with named state and disturbance dimensions.
#[derive(Debug, Clone)]
pub struct SystemModel {
    name: String,
    state_dim: usize,
    disturbance_dim: usize,
    dynamics: Dynamics,
}

#[derive(Debug, Clone)]
enum Dynamics {
    /// x' = y, y' = -alpha*y + x - x^3 + forcing*cos(omega*t)
    Duffing {
        alpha: f64,
        forcing_amplitude: f64,
        omega: f64,
    },
    /// Planar quadrotor: state (x, h, theta, x', h', theta'), inputs
    /// (thrust u1, desired angle u2) held constant over a run.
    Quadrotor {
        gravity: f64,
        thrust_gain: f64,
        d0: f64,
        d1: f64,
        n0: f64,
    },
    /// x' = A x for a 2x2 matrix A.
    LinearPlanar { a: [[f64; 2]; 2] },
}

impl SystemModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dimension(&self) -> usize {
        self.state_dim
    }

    pub fn disturbance_dimension(&self) -> usize {
        self.disturbance_dim
    }

    /// Evaluates the vector field into `dx`.
    pub fn vector_field(&self, t: f64, x: &[f64], u: &[f64], dx: &mut [f64]) {
        debug_assert_eq!(x.len(), self.state_dim);
        debug_assert_eq!(u.len(), self.disturbance_dim);
        debug_assert_eq!(dx.len(), self.state_dim);
        match &self.dynamics {
            Dynamics::Duffing {
                alpha,
                forcing_amplitude,
                omega,
            } => {
                let (px, py) = (x[0], x[1]);
                dx[0] = py;
                dx[1] = -alpha * py + px - px * px * px + forcing_amplitude * (omega * t).cos();
            }
            Dynamics::Quadrotor {
                gravity,
                thrust_gain,
                d0,
                d1,
                n0,
            } => {
                let theta = x[2];
                let (u1, u2) = (u[0], u[1]);
                dx[0] = x[3];
                dx[1] = x[4];
                dx[2] = x[5];
                dx[3] = u1 * thrust_gain * theta.sin();
                dx[4] = -gravity + u1 * thrust_gain * theta.cos();
                dx[5] = -d0 * theta - d1 * x[5] + n0 * u2;
            }
            Dynamics::LinearPlanar { a } => {
                dx[0] = a[0][0] * x[0] + a[0][1] * x[1];
                dx[1] = a[1][0] * x[0] + a[1][1] * x[1];
            }
        }
    }
}

/// A model together with its sampling spaces and time range.
#[derive(Debug, Clone)]
pub struct ModelSetup {
    pub model: SystemModel,
    pub initial_box: UniformBoxSpec,
    pub disturbance_box: UniformBoxSpec,
    pub t0: f64,
    pub t1: f64,
}

const LINEAR2D_A: [[f64; 2]; 2] = [[-0.7, -1.0], [1.0, -0.7]];

/// Returns one of the built-in configurations: `duffing`, `quadrotor`, or
/// `linear2d`, with its initial set, disturbance set, and time range.
pub fn builtin_model(name: &str) -> Result<ModelSetup> {
    match name {
        "duffing" => Ok(ModelSetup {
            model: SystemModel {
                name: "duffing".into(),
                state_dim: 2,
                disturbance_dim: 0,
                dynamics: Dynamics::Duffing {
                    alpha: 0.05,
                    forcing_amplitude: 0.4,
                    omega: 1.3,
                },
            },
            initial_box: UniformBoxSpec::new(vec![0.95, -0.05], vec![1.05, 0.05])?,
            disturbance_box: UniformBoxSpec::empty(),
            t0: 0.0,
            t1: 100.0,
        }),
        "quadrotor" => {
            let gravity = 9.81;
            let thrust_gain = 0.89 / 1.4;
            let hover = gravity / thrust_gain;
            let pi = std::f64::consts::PI;
            Ok(ModelSetup {
                model: SystemModel {
                    name: "quadrotor".into(),
                    state_dim: 6,
                    disturbance_dim: 2,
                    dynamics: Dynamics::Quadrotor {
                        gravity,
                        thrust_gain,
                        d0: 70.0,
                        d1: 17.0,
                        n0: 55.0,
                    },
                },
                initial_box: UniformBoxSpec::new(
                    vec![-1.7, 0.3, -pi / 12.0, -0.8, -1.0, -pi / 2.0],
                    vec![1.7, 2.0, pi / 12.0, 0.8, 1.0, pi / 2.0],
                )?,
                disturbance_box: UniformBoxSpec::new(
                    vec![-1.5 + hover, -pi / 4.0],
                    vec![1.5 + hover, pi / 4.0],
                )?,
                t0: 0.0,
                t1: 5.0,
            })
        }
        "linear2d" => Ok(ModelSetup {
            model: SystemModel {
                name: "linear2d".into(),
                state_dim: 2,
                disturbance_dim: 0,
                dynamics: Dynamics::LinearPlanar { a: LINEAR2D_A },
            },
            initial_box: UniformBoxSpec::new(vec![1.0, 1.0], vec![1.25, 1.25])?,
            disturbance_box: UniformBoxSpec::empty(),
            t0: 0.0,
            t1: 10.0,
        }),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// Closed-form transition matrix `exp(A t)` for the `linear2d` system.
///
/// The built-in matrix is `-0.7 I + J` with `J` the rotation generator, so
/// `exp(A t) = exp(-0.7 t) (cos t * I + sin t * J)`.
pub fn linear2d_transition(t: f64) -> [[f64; 2]; 2] {
    let decay = (-0.7 * t).exp();
    let (s, c) = t.sin_cos();
    [[decay * c, -decay * s], [decay * s, decay * c]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrotor_configuration_matches_reference() {
        let setup = builtin_model("quadrotor").unwrap();
        assert_eq!(setup.model.state_dimension(), 6);
        assert_eq!(setup.model.disturbance_dimension(), 2);
        let hover = 9.81 / (0.89 / 1.4);
        assert!((setup.disturbance_box.lower()[0] - (-1.5 + hover)).abs() < 1e-12);
        assert!((setup.disturbance_box.upper()[0] - (1.5 + hover)).abs() < 1e-12);
        assert_eq!(setup.t1, 5.0);
    }

    #[test]
    fn duffing_configuration_matches_reference() {
        let setup = builtin_model("duffing").unwrap();
        assert_eq!(setup.model.disturbance_dimension(), 0);
        assert_eq!(setup.t1, 100.0);
        assert_eq!(setup.initial_box.lower(), &[0.95, -0.05]);
    }

    #[test]
    fn linear2d_field_matches_matrix() {
        let setup = builtin_model("linear2d").unwrap();
        let mut dx = [0.0; 2];
        setup.model.vector_field(0.0, &[1.0, 2.0], &[], &mut dx);
        assert_eq!(dx, [-0.7 - 2.0, 1.0 - 1.4]);
    }

    #[test]
    fn unknown_model_is_rejected() {
        assert!(matches!(
            builtin_model("vanderpol"),
            Err(Error::UnknownModel(_))
        ));
    }

    #[test]
    fn transition_matrix_at_zero_is_identity() {
        let m = linear2d_transition(0.0);
        assert_eq!(m, [[1.0, 0.0], [0.0, 1.0]]);
    }
}
