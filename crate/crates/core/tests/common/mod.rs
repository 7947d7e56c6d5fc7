#![allow(dead_code)]

use hiv_latency::analysis;
use hiv_latency::model::{Efficacy, LatentParams, State4};
use rand::Rng;

/// Every reference value scaled by a log-uniform factor in [0.1, 10];
/// `p` uniform in [0.01, 0.5].
pub fn random_params<R: Rng>(rng: &mut R) -> LatentParams {
    let mut lp = LatentParams::table1();
    let mut f = || 10f64.powf(rng.gen_range(-1.0..=1.0));
    lp.core.lambda *= f();
    lp.core.d_t *= f();
    lp.core.d_i *= f();
    lp.core.d_v *= f();
    lp.core.k *= f();
    lp.core.n *= f();
    lp.alpha *= f();
    lp.d_l *= f();
    lp.p = rng.gen_range(0.01..=0.5);
    lp
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Positive state spread over several decades around the reference scales.
pub fn random_state<R: Rng>(rng: &mut R) -> State4 {
    State4::new(
        log_uniform(rng, 1e3, 1e7),
        log_uniform(rng, 1e-3, 1e5),
        log_uniform(rng, 1e-3, 1e5),
        log_uniform(rng, 1e-3, 1e7),
    )
}

/// Protease efficacy bringing the latent reproduction number to `target`,
/// or none when it already sits below.
pub fn efficacy_for_rl(lp: &LatentParams, target: f64) -> Efficacy {
    let rl = analysis::r_l(lp, &Efficacy::NONE);
    if rl <= target {
        Efficacy::NONE
    } else {
        Efficacy::protease_only(1.0 - target / rl).unwrap()
    }
}
