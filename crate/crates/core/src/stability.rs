//! Linearization of the latent model at its steady states, closed-form
//! characteristic-polynomial coefficients, Routh–Hurwitz verdicts and a
//! numeric eigenvalue cross-check.
//!
//! At the infection-free state the characteristic polynomial factors as
//! `(η + d_T) · (η³ + A1 η² + A2 η + A3)`; the cubic carries all the stability
//! information. At the endemic state the full quartic is used. All
//! coefficients are evaluated with therapy-scaled `k` and `N`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, at_threshold, EquilibriumKind};
use crate::eigen::{eigen_spectrum, EigenSpectrum};
use crate::error::{Error, Result};
use crate::model::{CoreParams, Efficacy, LatentParams, State3, State4};

/// Relative strictness of a Routh–Hurwitz inequality.
pub const RH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian(pub DMatrix<f64>);

impl Jacobian {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// 1-based accessor.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.0[(row - 1, col - 1)]
    }

    pub fn spectrum(&self) -> Result<EigenSpectrum> {
        eigen_spectrum(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharCoeffsCubic {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharCoeffsQuartic {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl CharCoeffsCubic {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.a1, self.a2, self.a3]
    }
}

impl CharCoeffsQuartic {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.a1, self.a2, self.a3, self.a4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LocallyStable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Positive,
    Zero,
    Negative,
}

fn sign_with_tol(x: f64, scale: f64) -> Sign {
    let tol = RH_TOL * scale;
    if x > tol {
        Sign::Positive
    } else if x < -tol {
        Sign::Negative
    } else {
        Sign::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub coefficients: Vec<f64>,
    /// `A_i > 0` for each coefficient.
    pub positivity: Vec<bool>,
    /// `A1 A2 - A3 > 0`, and for the quartic also `A3(A1 A2 - A3) - A4 A1² > 0`.
    pub composite: Vec<bool>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproduction_number: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<EigenSpectrum>,
    /// The eigenvalue `-d_T` split off at the infection-free state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factored_root: Option<f64>,
}

impl StabilityReport {
    fn from_signs(coefficients: Vec<f64>, pos: &[Sign], comp: &[Sign]) -> Self {
        let all = pos.iter().chain(comp);
        let verdict = if all.clone().any(|s| *s == Sign::Negative) {
            Verdict::Unstable
        } else if all.clone().any(|s| *s == Sign::Zero) {
            Verdict::Marginal
        } else {
            Verdict::LocallyStable
        };
        StabilityReport {
            coefficients,
            positivity: pos.iter().map(|s| *s == Sign::Positive).collect(),
            composite: comp.iter().map(|s| *s == Sign::Positive).collect(),
            verdict,
            reproduction_number: None,
            spectrum: None,
            factored_root: None,
        }
    }

    pub fn all_conditions_hold(&self) -> bool {
        self.positivity.iter().chain(&self.composite).all(|&b| b)
    }
}

/// Jacobian of the latent model at an arbitrary point.
pub fn jacobian_4cm(lp: &LatentParams, eff: &Efficacy, at: &State4) -> Jacobian {
    let c = lp.core.effective(eff);
    let (t, v) = (at.healthy, at.virus);
    let p = lp.p;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        -c.d_t - c.k * v,     0.0,          0.0,               -c.k * t,
        (1.0 - p) * c.k * v,  -c.d_i,       lp.alpha,          (1.0 - p) * c.k * t,
        p * c.k * v,          0.0,          -lp.latent_exit(), p * c.k * t,
        0.0,                  c.n * c.d_i,  0.0,               -c.d_v,
    ]);
    Jacobian(m)
}

/// Jacobian of the three-compartment model at an arbitrary point.
pub fn jacobian_3cm(core: &CoreParams, eff: &Efficacy, at: &State3) -> Jacobian {
    let c = core.effective(eff);
    let (t, v) = (at.healthy, at.virus);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(3, 3, &[
        -c.d_t - c.k * v,  0.0,          -c.k * t,
        c.k * v,           -c.d_i,       c.k * t,
        0.0,               c.n * c.d_i,  -c.d_v,
    ]);
    Jacobian(m)
}

/// Cubic factor of the characteristic polynomial at the infection-free state.
pub fn char_coeffs_noninfective(lp: &LatentParams, eff: &Efficacy) -> CharCoeffsCubic {
    let c = lp.core.effective(eff);
    let exit = lp.latent_exit();
    let rl = analysis::r_l(lp, eff);
    CharCoeffsCubic {
        a1: c.d_v + c.d_i + exit,
        a2: c.d_i * c.d_v + exit * (c.d_i + c.d_v)
            - (1.0 - lp.p) * c.lambda * c.n * c.k * c.d_i / c.d_t,
        a3: exit * c.d_i * c.d_v * (1.0 - rl),
    }
}

/// Characteristic quartic at the endemic state. Requires `R_L > 1`.
pub fn char_coeffs_endemic(lp: &LatentParams, eff: &Efficacy) -> Result<CharCoeffsQuartic> {
    let rl = analysis::r_l(lp, eff);
    if !analysis::above_threshold(rl) {
        return Err(Error::EndemicAbsent { r: rl });
    }
    Ok(endemic_coeffs_unchecked(lp, eff, rl))
}

fn endemic_coeffs_unchecked(lp: &LatentParams, eff: &Efficacy, rl: f64) -> CharCoeffsQuartic {
    let c = lp.core.effective(eff);
    let exit = lp.latent_exit();
    let p = lp.p;
    let dtr = c.d_t * rl;
    let drive = c.lambda * c.n * c.k * c.d_i / dtr;
    CharCoeffsQuartic {
        a1: dtr + c.d_v + c.d_i + exit,
        a2: dtr * (exit + c.d_i + c.d_v) + exit * (c.d_i + c.d_v) + c.d_i * c.d_v
            - (1.0 - p) * drive,
        a3: dtr * exit * (c.d_i + c.d_v) + dtr * c.d_i * c.d_v + exit * c.d_i * c.d_v
            - drive * ((1.0 - p) * c.d_t + (1.0 - p) * lp.d_l + lp.alpha),
        a4: c.d_t * exit * c.d_i * c.d_v * (rl - 1.0),
    }
}

/// Sum of the magnitudes of the additive terms in each cubic coefficient;
/// the natural scale for relative comparisons near cancellation.
pub fn noninfective_term_scales(lp: &LatentParams, eff: &Efficacy) -> [f64; 3] {
    let c = lp.core.effective(eff);
    let exit = lp.latent_exit();
    let drive = c.lambda * c.n * c.k * c.d_i / c.d_t;
    [
        c.d_v + c.d_i + exit,
        c.d_i * c.d_v + exit * (c.d_i + c.d_v) + (1.0 - lp.p) * drive,
        exit * c.d_i * c.d_v + drive * ((1.0 - lp.p) * lp.d_l + lp.alpha),
    ]
}

/// Term-magnitude scales of the endemic quartic, as for the cubic.
pub fn endemic_term_scales(lp: &LatentParams, eff: &Efficacy) -> [f64; 4] {
    let c = lp.core.effective(eff);
    let exit = lp.latent_exit();
    let rl = analysis::r_l(lp, eff);
    let dtr = c.d_t * rl;
    let drive = c.lambda * c.n * c.k * c.d_i / dtr;
    [
        dtr + c.d_v + c.d_i + exit,
        dtr * (exit + c.d_i + c.d_v) + exit * (c.d_i + c.d_v) + c.d_i * c.d_v + (1.0 - lp.p) * drive,
        dtr * exit * (c.d_i + c.d_v) + dtr * c.d_i * c.d_v + exit * c.d_i * c.d_v
            + drive * ((1.0 - lp.p) * c.d_t + (1.0 - lp.p) * lp.d_l + lp.alpha),
        c.d_t * exit * c.d_i * c.d_v * rl.max(1.0),
    ]
}

pub fn routh_hurwitz_cubic(c: &CharCoeffsCubic) -> StabilityReport {
    let scale = c.a1.abs().max(c.a2.abs()).max(c.a3.abs());
    let pos = [c.a1, c.a2, c.a3].map(|a| sign_with_tol(a, scale));
    let prod = c.a1 * c.a2;
    let comp = [sign_with_tol(prod - c.a3, prod.abs().max(c.a3.abs()))];
    StabilityReport::from_signs(c.to_vec(), &pos, &comp)
}

pub fn routh_hurwitz_quartic(c: &CharCoeffsQuartic) -> StabilityReport {
    let scale = [c.a1, c.a2, c.a3, c.a4]
        .iter()
        .fold(0.0f64, |m, a| m.max(a.abs()));
    let pos = [c.a1, c.a2, c.a3, c.a4].map(|a| sign_with_tol(a, scale));
    let prod = c.a1 * c.a2;
    let first = prod - c.a3;
    let lhs = c.a3 * first;
    let rhs = c.a4 * c.a1 * c.a1;
    let comp = [
        sign_with_tol(first, prod.abs().max(c.a3.abs())),
        sign_with_tol(
            lhs - rhs,
            (c.a3 * prod).abs().max((c.a3 * c.a3).abs()).max(rhs.abs()),
        ),
    ];
    StabilityReport::from_signs(c.to_vec(), &pos, &comp)
}

/// Divides the monic polynomial `ηⁿ + c1 ηⁿ⁻¹ + .. + cn` by `(η - root)`,
/// returning the quotient coefficients and the remainder.
pub fn deflate(coeffs: &[f64], root: f64) -> (Vec<f64>, f64) {
    let mut out = Vec::with_capacity(coeffs.len());
    let mut carry = 1.0;
    for &c in coeffs {
        carry = c + carry * root;
        out.push(carry);
    }
    let rem = out.pop().unwrap_or(0.0);
    (out, rem)
}

/// Routh–Hurwitz verdict at the chosen steady state, confirmed against the
/// numeric spectrum of the Jacobian there.
pub fn classify_equilibrium(
    lp: &LatentParams,
    eff: &Efficacy,
    which: EquilibriumKind,
) -> Result<StabilityReport> {
    let rl = analysis::r_l(lp, eff);
    let marginal = at_threshold(rl);
    let c = &lp.core;
    let t0 = c.healthy_steady_state();
    let e_ni = State4::new(t0, 0.0, 0.0, 0.0);

    let (mut report, point) = match which {
        EquilibriumKind::NonInfective => {
            let coeffs = char_coeffs_noninfective(lp, eff);
            (routh_hurwitz_cubic(&coeffs), e_ni)
        }
        EquilibriumKind::Endemic => {
            if marginal {
                let coeffs = endemic_coeffs_unchecked(lp, eff, rl);
                (routh_hurwitz_quartic(&coeffs), e_ni)
            } else {
                let coeffs = char_coeffs_endemic(lp, eff)?;
                let point = analysis::endemic_state_4cm(lp, eff)
                    .ok_or(Error::EndemicAbsent { r: rl })?;
                (routh_hurwitz_quartic(&coeffs), point)
            }
        }
    };

    let spectrum = jacobian_4cm(lp, eff, &point).spectrum()?;
    if which == EquilibriumKind::NonInfective {
        report.factored_root = spectrum
            .nearest_real(-c.d_t)
            .map(|i| spectrum.eigenvalues[i].re);
    }

    if marginal {
        report.verdict = Verdict::Marginal;
    } else {
        let numeric = if spectrum.max_real_part() < 0.0 {
            Verdict::LocallyStable
        } else {
            Verdict::Unstable
        };
        if numeric != report.verdict {
            return Err(Error::VerdictMismatch(format!(
                "{which:?} at R_L = {rl}: Routh–Hurwitz says {:?}, max Re(η) = {:e}",
                report.verdict,
                spectrum.max_real_part()
            )));
        }
    }
    report.reproduction_number = Some(rl);
    report.spectrum = Some(spectrum);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rhs_4cm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn table1() -> LatentParams {
        LatentParams::table1()
    }

    fn eff_for_rl(lp: &LatentParams, target: f64) -> Efficacy {
        let rl = analysis::r_l(lp, &Efficacy::NONE);
        Efficacy::protease_only(1.0 - target / rl).unwrap()
    }

    #[test]
    fn jacobian_at_noninfective_entries() {
        let lp = table1();
        let j = jacobian_4cm(&lp, &Efficacy::NONE, &State4::new(1.0e6, 0.0, 0.0, 0.0));
        assert!((j.entry(1, 4) + 2.4e-2).abs() < 1e-15);
        assert_eq!(j.entry(4, 2), 2000.0);
        assert_eq!(j.entry(3, 3), -0.014);
        assert_eq!(j.entry(2, 3), 0.01);
    }

    #[test]
    fn jacobian_3cm_structure() {
        let c = CoreParams::table1();
        let j = jacobian_3cm(&c, &Efficacy::NONE, &State3::new(1.0e6, 0.0, 0.0));
        assert_eq!(j.entry(3, 2), c.n * c.d_i);
    }

    fn fd_jacobian(lp: &LatentParams, eff: &Efficacy, s: &State4) -> DMatrix<f64> {
        let x = s.to_array();
        let mut m = DMatrix::zeros(4, 4);
        for col in 0..4 {
            let h = 1e-4 * x[col].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[col] += h;
            xm[col] -= h;
            let fp = rhs_4cm(lp, eff, &State4::from_array(xp)).unwrap().to_array();
            let fm = rhs_4cm(lp, eff, &State4::from_array(xm)).unwrap().to_array();
            for row in 0..4 {
                m[(row, col)] = (fp[row] - fm[row]) / (2.0 * h);
            }
        }
        m
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lp = table1();
        for _ in 0..100 {
            let s = State4::new(
                rng.gen_range(1e4..1e6),
                rng.gen_range(0.0..1e4),
                rng.gen_range(0.0..1e5),
                rng.gen_range(0.0..1e6),
            );
            let eff = Efficacy::new(rng.gen_range(0.0..0.9), rng.gen_range(0.0..0.9)).unwrap();
            let j = jacobian_4cm(&lp, &eff, &s);
            let fd = fd_jacobian(&lp, &eff, &s);
            let scale = j.0.amax();
            for (a, b) in j.0.iter().zip(fd.iter()) {
                assert!((a - b).abs() <= 1e-5 * scale.max(a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn jacobian_3cm_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = CoreParams::table1();
        for _ in 0..100 {
            let s = State3::new(rng.gen_range(1e4..1e6), rng.gen_range(0.0..1e4), rng.gen_range(0.0..1e6));
            let j = jacobian_3cm(&c, &Efficacy::NONE, &s);
            let x = s.to_array();
            for col in 0..3 {
                let h = 1e-4 * x[col].abs().max(1.0);
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let fp = crate::model::rhs_3cm(&c, &Efficacy::NONE, &State3::from_array(xp)).unwrap().to_array();
                let fm = crate::model::rhs_3cm(&c, &Efficacy::NONE, &State3::from_array(xm)).unwrap().to_array();
                for row in 0..3 {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    assert!((fd - j.0[(row, col)]).abs() <= 1e-5 * j.0.amax());
                }
            }
        }
    }

    #[test]
    fn eigenpairs_of_3cm_jacobian() {
        let c = CoreParams::table1();
        let ei = analysis::equilibria_3cm(&c, &Efficacy::NONE)[1].state;
        let s = jacobian_3cm(&c, &Efficacy::NONE, &ei).spectrum().unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.max_relative_residual <= 1e-8);
        assert!(s.max_real_part() < 0.0);
    }

    #[test]
    fn noninfective_coefficients_table1() {
        let c = char_coeffs_noninfective(&table1(), &Efficacy::NONE);
        assert!((c.a1 - 24.014).abs() < 1e-12);
        assert!(c.a3 < 0.0);
        let lp = table1();
        let marginal = char_coeffs_noninfective(&lp, &eff_for_rl(&lp, 1.0));
        assert!(marginal.a3.abs() < 1e-15);
    }

    #[test]
    fn noninfective_a3_matches_expanded_display() {
        let lp = table1();
        let c = lp.core;
        let exit = lp.latent_exit();
        let drive = c.lambda * c.n * c.k * c.d_i / c.d_t;
        let expanded = exit * c.d_i * c.d_v - drive * ((1.0 - lp.p) * lp.d_l + lp.alpha);
        let closed = char_coeffs_noninfective(&lp, &Efficacy::NONE).a3;
        assert!((expanded - closed).abs() <= 1e-12 * drive);
    }

    #[test]
    fn endemic_coefficients_table1() {
        let lp = table1();
        let c = char_coeffs_endemic(&lp, &Efficacy::NONE).unwrap();
        // 0.01 * 0.014 * 1 * 23 * (R_L - 1)
        let rl = analysis::r_l(&lp, &Efficacy::NONE);
        assert!((c.a4 - 0.01 * 0.014 * 23.0 * (rl - 1.0)).abs() < 1e-15);
        assert!((c.a4 - 3.307e-3).abs() < 1e-5);
        assert!((c.a1 - 24.034).abs() < 1e-3);
        let below = eff_for_rl(&lp, 0.9);
        assert!(matches!(char_coeffs_endemic(&lp, &below), Err(Error::EndemicAbsent { .. })));
    }

    #[test]
    fn endemic_a4_expanded_form_agrees() {
        let lp = table1();
        let c = lp.core;
        let rl = analysis::r_l(&lp, &Efficacy::NONE);
        let exit = lp.latent_exit();
        let expanded = c.d_t * rl * exit * c.d_i * c.d_v
            - c.lambda * c.n * c.k * c.d_i / rl * ((1.0 - lp.p) * lp.d_l + lp.alpha);
        let closed = char_coeffs_endemic(&lp, &Efficacy::NONE).unwrap().a4;
        assert!((expanded - closed).abs() <= 1e-12 * c.d_t * rl * exit * c.d_i * c.d_v);
    }

    #[test]
    fn routh_hurwitz_cubic_cases() {
        let r = routh_hurwitz_cubic(&CharCoeffsCubic { a1: 3.0, a2: 3.0, a3: 1.0 });
        assert!(r.all_conditions_hold());
        assert_eq!(r.verdict, Verdict::LocallyStable);

        let lp = table1();
        let r = routh_hurwitz_cubic(&char_coeffs_noninfective(&lp, &Efficacy::NONE));
        assert!(!r.positivity[2]);
        assert_eq!(r.verdict, Verdict::Unstable);

        let eff = Efficacy::protease_only(0.6).unwrap();
        assert!((analysis::r_l(&lp, &eff) - 0.81).abs() < 0.005);
        let r = routh_hurwitz_cubic(&char_coeffs_noninfective(&lp, &eff));
        assert_eq!(r.verdict, Verdict::LocallyStable);

        let r = routh_hurwitz_cubic(&CharCoeffsCubic { a1: 3.0, a2: 3.0, a3: 0.0 });
        assert_eq!(r.verdict, Verdict::Marginal);
    }

    #[test]
    fn routh_hurwitz_quartic_cases() {
        let r = routh_hurwitz_quartic(&CharCoeffsQuartic { a1: 4.0, a2: 6.0, a3: 4.0, a4: 1.0 });
        assert!(r.all_conditions_hold());

        let lp = table1();
        let r = routh_hurwitz_quartic(&char_coeffs_endemic(&lp, &Efficacy::NONE).unwrap());
        assert_eq!(r.verdict, Verdict::LocallyStable);

        let forced = endemic_coeffs_unchecked(&lp, &Efficacy::NONE, 0.8);
        assert!(forced.a4 < 0.0);
        let r = routh_hurwitz_quartic(&forced);
        assert!(!r.positivity[3]);
        assert_eq!(r.verdict, Verdict::Unstable);
    }

    #[test]
    fn noninfective_spectrum_is_saddle_with_factored_root() {
        let lp = table1();
        let j = jacobian_4cm(&lp, &Efficacy::NONE, &State4::new(1.0e6, 0.0, 0.0, 0.0));
        let s = j.spectrum().unwrap();
        assert_eq!(s.count_positive_real(), 1);
        let i = s.nearest_real(-0.01).unwrap();
        assert!((s.eigenvalues[i].re + 0.01).abs() < 1e-9);
        assert!(s.eigenvalues[i].im.abs() < 1e-9);
    }

    #[test]
    fn spectrum_trace_identity() {
        let lp = table1();
        let ei = analysis::endemic_state_4cm(&lp, &Efficacy::NONE).unwrap();
        let j = jacobian_4cm(&lp, &Efficacy::NONE, &ei);
        let s = j.spectrum().unwrap();
        let sum = s.sum();
        assert!((sum.re - j.0.trace()).abs() <= 1e-9 * j.0.trace().abs());
        assert!(sum.im.abs() <= 1e-9 * j.0.trace().abs());
    }

    #[test]
    fn classify_table1() {
        let lp = table1();
        let ni = classify_equilibrium(&lp, &Efficacy::NONE, EquilibriumKind::NonInfective).unwrap();
        assert_eq!(ni.verdict, Verdict::Unstable);
        assert!((ni.factored_root.unwrap() + 0.01).abs() < 1e-9);
        let en = classify_equilibrium(&lp, &Efficacy::NONE, EquilibriumKind::Endemic).unwrap();
        assert_eq!(en.verdict, Verdict::LocallyStable);
        assert_eq!(en.spectrum.unwrap().len(), 4);
    }

    #[test]
    fn classify_marginal_and_absent() {
        let lp = table1();
        let rl = analysis::r_l(&lp, &Efficacy::NONE);
        for delta in [1e-13, -1e-13] {
            let eff = Efficacy::protease_only(1.0 - (1.0 + delta) / rl).unwrap();
            assert!(at_threshold(analysis::r_l(&lp, &eff)));
            for which in [EquilibriumKind::NonInfective, EquilibriumKind::Endemic] {
                let r = classify_equilibrium(&lp, &eff, which).unwrap();
                assert_eq!(r.verdict, Verdict::Marginal);
            }
        }
        let below = eff_for_rl(&lp, 0.5);
        assert!(matches!(
            classify_equilibrium(&lp, &below, EquilibriumKind::Endemic),
            Err(Error::EndemicAbsent { .. })
        ));
        let r = classify_equilibrium(&lp, &below, EquilibriumKind::NonInfective).unwrap();
        assert_eq!(r.verdict, Verdict::LocallyStable);
    }

    fn random_params(rng: &mut ChaCha8Rng) -> LatentParams {
        let mut lp = table1();
        let mut f = || 10f64.powf(rng.gen_range(-1.0..1.0));
        lp.core.lambda *= f();
        lp.core.d_t *= f();
        lp.core.d_i *= f();
        lp.core.d_v *= f();
        lp.core.k *= f();
        lp.core.n *= f();
        lp.alpha *= f();
        lp.d_l *= f();
        lp.p = rng.gen_range(0.01..0.5);
        lp
    }

    #[test]
    fn closed_coefficients_match_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut endemic = 0;
        for _ in 0..200 {
            let lp = random_params(&mut rng);
            let eff = Efficacy::NONE;
            let c = &lp.core;
            let e_ni = State4::new(c.healthy_steady_state(), 0.0, 0.0, 0.0);
            let spec = jacobian_4cm(&lp, &eff, &e_ni).spectrum().unwrap();
            let (cubic, rem) = deflate(&spec.characteristic_coefficients(), -c.d_t);
            let closed = char_coeffs_noninfective(&lp, &eff).to_vec();
            let scales = noninfective_term_scales(&lp, &eff);
            assert!(rem.abs() <= 1e-9 * scales[2] * c.d_t.max(1.0));
            for i in 0..3 {
                assert!((cubic[i] - closed[i]).abs() <= 1e-9 * scales[i], "A{}: {} vs {}", i + 1, cubic[i], closed[i]);
            }
            if let Ok(q) = char_coeffs_endemic(&lp, &eff) {
                endemic += 1;
                let at = analysis::endemic_state_4cm(&lp, &eff).unwrap();
                let num = jacobian_4cm(&lp, &eff, &at).spectrum().unwrap().characteristic_coefficients();
                let scales = endemic_term_scales(&lp, &eff);
                for (i, a) in q.to_vec().iter().enumerate() {
                    assert!((num[i] - a).abs() <= 1e-9 * scales[i], "A{}: {} vs {}", i + 1, num[i], a);
                }
            }
        }
        assert!(endemic > 20);
    }

    #[test]
    fn deflation_by_known_root() {
        // (η + 1)(η + 2)(η + 3) = η³ + 6η² + 11η + 6
        let (q, rem) = deflate(&[6.0, 11.0, 6.0], -1.0);
        assert_eq!(q, vec![5.0, 6.0]);
        assert_eq!(rem, 0.0);
    }
}
