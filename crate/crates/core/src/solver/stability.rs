use crate::error::{Error, Result};
use crate::game::{discriminant, stationary_price, Game};
use crate::scenario::{ActiveSet, Scenario};

/// Which branch of the clamped best response an SU is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClampRegime {
    /// Stationary price inside the useful range.
    Interior,
    /// Clamped to `(alpha - Q) / beta`: the DU buys the full cap.
    Lower,
    /// Clamped to `alpha / beta`: the DU buys nothing.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `jacobian[n][k] = d qhat_n / d q_k`.
    pub jacobian: [[f64; 2]; 2],
    pub regimes: [ClampRegime; 2],
    pub eigenvalues: [Eigenvalue; 2],
    pub spectral_radius: f64,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.spectral_radius < 1.0
    }
}

/// Jacobian of the simultaneous best-response price map of two SUs.
///
/// Own-price entries vanish because `alpha_n` does not depend on `q_n`.
/// `qhat_n` depends on `q_k` only through `alpha_n`; its slope in `alpha_n` is
/// `(1 - 1/(2 sqrt(zeta_n))) / beta_n` on the stationary branch and
/// `1 / beta_n` on either clamp.
pub fn jacobian_stability(
    scenario: &Scenario,
    active: &ActiveSet,
    prices: &[f64],
) -> Result<StabilityReport> {
    if active.len() != 2 {
        return Err(Error::Unsupported(format!(
            "stability analysis needs exactly 2 active SUs, got {}",
            active.len()
        )));
    }
    let game = Game::new(scenario, active.clone())?;
    let coeffs = game.coefficients(prices)?;
    let mut jacobian = [[0.0; 2]; 2];
    let mut regimes = [ClampRegime::Interior; 2];
    for n in 0..2 {
        let c = &coeffs.su[n];
        let mu = stationary_price(c)?;
        let (lo, hi) = c.price_range();
        regimes[n] = if mu < lo {
            ClampRegime::Lower
        } else if mu > hi {
            ClampRegime::Upper
        } else {
            ClampRegime::Interior
        };
        let slope = match regimes[n] {
            ClampRegime::Interior => (1.0 - 0.5 / discriminant(c).sqrt()) / c.beta,
            ClampRegime::Lower | ClampRegime::Upper => 1.0 / c.beta,
        };
        let k = 1 - n;
        jacobian[n][k] = slope * coeffs.cross_price_sensitivity(n, k);
    }
    let product = jacobian[0][1] * jacobian[1][0];
    let root = product.abs().sqrt();
    let eigenvalues = if product >= 0.0 {
        [
            Eigenvalue { re: root, im: 0.0 },
            Eigenvalue { re: -root, im: 0.0 },
        ]
    } else {
        [
            Eigenvalue { re: 0.0, im: root },
            Eigenvalue { re: 0.0, im: -root },
        ]
    };
    Ok(StabilityReport {
        jacobian,
        regimes,
        eigenvalues,
        spectral_radius: root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{best_response_map, solve_cig, SolverConfig};

    #[test]
    fn reference_equilibrium_is_stable() {
        let s = Scenario::two_su_reference();
        let r = solve_cig(&s, &s.all_sus(), &SolverConfig::cig().with_epsilon(1e-12)).unwrap();
        let report = jacobian_stability(&s, &s.all_sus(), r.prices()).unwrap();
        assert!(report.is_stable());
        assert_eq!(report.jacobian[0][0], 0.0);
        assert_eq!(report.jacobian[1][1], 0.0);
        assert_eq!(report.regimes, [ClampRegime::Interior; 2]);
        assert_eq!(report.eigenvalues[0].modulus(), report.spectral_radius);
    }

    #[test]
    fn closed_form_matches_central_differences() {
        let s = Scenario::two_su_reference();
        let game = Game::new(&s, s.all_sus()).unwrap();
        let q = [0.27, 0.23];
        let report = jacobian_stability(&s, &s.all_sus(), &q).unwrap();
        let h = 1e-6;
        for k in 0..2 {
            let mut up = q;
            let mut down = q;
            up[k] += h;
            down[k] -= h;
            let a = best_response_map(&game, &up).unwrap();
            let b = best_response_map(&game, &down).unwrap();
            for n in 0..2 {
                let fd = (a[n] - b[n]) / (2.0 * h);
                assert!((fd - report.jacobian[n][k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn independent_goods_decouple() {
        let mut s = Scenario::two_su_reference();
        s.system.substitutability = 0.0;
        let report = jacobian_stability(&s, &s.all_sus(), &[0.2, 0.2]).unwrap();
        assert_eq!(report.spectral_radius, 0.0);
        assert_eq!(report.jacobian, [[0.0; 2]; 2]);
    }

    #[test]
    fn cross_coupling_stays_below_one() {
        let s = Scenario::two_su_reference();
        let game = Game::new(&s, s.all_sus()).unwrap();
        let c = game.coefficients(&[0.2, 0.2]).unwrap();
        for n in 0..2 {
            let k = 1 - n;
            assert!(c.cross_price_sensitivity(n, k) / c.su[n].beta < 1.0);
        }
    }

    #[test]
    fn three_sus_are_unsupported() {
        let s = Scenario::three_su_reference(0.1);
        let err = jacobian_stability(&s, &s.all_sus(), &[0.2; 3]).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }
}
