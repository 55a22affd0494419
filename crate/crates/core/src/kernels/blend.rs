//! Front-to-back alpha compositing of ordered ray samples.

use crate::error::{CoreError, Result};
use crate::EARLY_TERMINATION_FLOOR;

/// One composited sample: RGB color and opacity already in alpha form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendSample {
    pub color: [f64; 3],
    pub alpha: f64,
}

/// Convert a volume density over a ray segment into an alpha:
/// α = 1 − exp(−σ·δ). Negative densities violate the contract.
pub fn alpha_from_density(density: f64, segment: f64) -> Result<f64> {
    if density < 0.0 {
        return Err(CoreError::Contract(format!("negative density {density}")));
    }
    Ok(1.0 - (-density * segment).exp())
}

/// Composite samples front to back: C = Σ cᵢ·αᵢ·Tᵢ with Tᵢ = Π_{j<i}(1−αⱼ).
/// Returns the color and the residual transmittance. With `early_termination`
/// the loop stops once T drops below the floor (1e-4), after applying the
/// sample that crossed it.
pub fn volume_blend(samples: &[BlendSample], early_termination: bool) -> ([f64; 3], f64) {
    let mut color = [0.0f64; 3];
    let mut t = 1.0f64;
    for s in samples {
        let w = s.alpha * t;
        for (c, &sc) in color.iter_mut().zip(&s.color) {
            *c += sc * w;
        }
        t *= 1.0 - s.alpha;
        if early_termination && t < EARLY_TERMINATION_FLOOR {
            break;
        }
    }
    (color, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_opaque_sample_is_its_color() {
        let (c, t) = volume_blend(
            &[BlendSample {
                color: [0.2, 0.4, 0.6],
                alpha: 1.0,
            }],
            true,
        );
        assert_eq!(c, [0.2, 0.4, 0.6]);
        assert_eq!(t, 0.0);
    }

    #[test]
    fn zero_density_passes_everything_through() {
        let samples: Vec<BlendSample> = (0..8)
            .map(|i| BlendSample {
                color: [i as f64; 3],
                alpha: alpha_from_density(0.0, 0.25).unwrap(),
            })
            .collect();
        let (c, t) = volume_blend(&samples, true);
        assert_eq!(c, [0.0; 3]);
        assert_eq!(t, 1.0);
    }

    #[test]
    fn two_sample_hand_composite() {
        let samples = [
            BlendSample {
                color: [1.0, 0.0, 0.0],
                alpha: 0.5,
            },
            BlendSample {
                color: [0.0, 1.0, 0.0],
                alpha: 1.0,
            },
        ];
        let (c, t) = volume_blend(&samples, true);
        assert_eq!(c, [0.5, 0.5, 0.0]);
        assert_eq!(t, 0.0);
    }

    #[test]
    fn negative_density_is_rejected() {
        assert!(alpha_from_density(-0.5, 0.1).is_err());
    }

    #[test]
    fn conservation_holds_for_any_alphas() {
        let samples: Vec<BlendSample> = (0..20)
            .map(|i| BlendSample {
                color: [0.3; 3],
                alpha: ((i * 13 % 7) as f64) / 7.0,
            })
            .collect();
        // Weights are recomputed independently; conservation must be exact up
        // to rounding with early termination off.
        let (_, t) = volume_blend(&samples, false);
        let mut running = 1.0;
        let mut total = 0.0;
        for s in &samples {
            total += s.alpha * running;
            running *= 1.0 - s.alpha;
        }
        assert!((total + t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn early_termination_stops_after_crossing_the_floor() {
        let samples: Vec<BlendSample> = (0..10)
            .map(|_| BlendSample {
                color: [1.0; 3],
                alpha: 0.99,
            })
            .collect();
        let (_, t_early) = volume_blend(&samples, true);
        // T after two samples = 0.01^2 = 1e-4; the third crosses the floor.
        assert!(t_early < EARLY_TERMINATION_FLOOR);
        assert!((t_early - 0.01f64.powi(3)).abs() < 1e-15);
    }
}
