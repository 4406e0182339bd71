//! Seeded, reproducible simulated sources.
//!
//! These serve as controls for the audit: a fair coin (positive control),
//! biased and Markov sources (negative controls), and a toy model of the
//! two-phase detection statistics. The generator is pinned to
//! xoshiro256++ seeded through SplitMix64 (`seed_from_u64`), with uniform
//! and Gaussian mappings fixed here, so identical configs produce identical
//! streams on every platform.

use core::f64::consts::PI;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use alloc::vec::Vec;

use crate::bitstream::{Builder, Origin};
use crate::phase::{PhaseSample, PhaseTrace};
use crate::{BitStream, Error, Result};

/// Default toss-phase width (radians) of the two-phase toy model.
pub const DEFAULT_PHASE_SIGMA: f64 = 0.0023;
/// Default relative amplitude of the control-phase density ripple.
pub const DEFAULT_CONTROL_BIAS: f64 = 0.05;

/// What kind of source to simulate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SourceKind {
    /// i.i.d. fair coin.
    Fair,
    /// i.i.d. with `P(1) = p_one`.
    Biased { p_one: f64 },
    /// Stationary two-state chain, started from its stationary distribution.
    Markov {
        p_one_given_zero: f64,
        p_one_given_one: f64,
    },
    /// Toy model of the bistable phase detection: toss phases cluster at
    /// `+-pi/2` with width `phase_sigma`; control phases are uniform with a
    /// small `1 + a cos(2 phi)` density ripple.
    P2Toy {
        phase_sigma: f64,
        control_bias_amplitude: f64,
    },
}

impl SourceKind {
    /// The toy phase model with the default width and ripple amplitude.
    pub fn p2_toy() -> Self {
        SourceKind::P2Toy {
            phase_sigma: DEFAULT_PHASE_SIGMA,
            control_bias_amplitude: DEFAULT_CONTROL_BIAS,
        }
    }
}

/// Full description of a simulated source.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub seed: u64,
    pub n: usize,
}

impl SourceConfig {
    pub fn new(kind: SourceKind, seed: u64, n: usize) -> Self {
        Self { kind, seed, n }
    }

    pub fn validate(&self) -> Result<()> {
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        match self.kind {
            SourceKind::Fair => Ok(()),
            SourceKind::Biased { p_one } => {
                if prob_ok(p_one) {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("p_one must lie in [0, 1]"))
                }
            }
            SourceKind::Markov {
                p_one_given_zero,
                p_one_given_one,
            } => {
                if prob_ok(p_one_given_zero) && prob_ok(p_one_given_one) {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(
                        "transition probabilities must lie in [0, 1]",
                    ))
                }
            }
            SourceKind::P2Toy {
                phase_sigma,
                control_bias_amplitude,
            } => {
                if phase_sigma.is_nan() || phase_sigma <= 0.0 {
                    return Err(Error::InvalidArgument("phase_sigma must be > 0"));
                }
                if !(0.0..=1.0).contains(&control_bias_amplitude) {
                    return Err(Error::InvalidArgument(
                        "control_bias_amplitude must lie in [0, 1]",
                    ));
                }
                Ok(())
            }
        }
    }
}

#[inline]
fn uniform_co(rng: &mut Xoshiro256PlusPlus) -> f64 {
    // [0, 1) with 53 random bits
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn uniform_oc(rng: &mut Xoshiro256PlusPlus) -> f64 {
    // (0, 1]
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One standard normal draw (Box-Muller, cosine branch, two uniforms).
#[inline]
fn standard_normal(rng: &mut Xoshiro256PlusPlus) -> f64 {
    let u1 = uniform_oc(rng);
    let u2 = uniform_co(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

fn wrap_phase(x: f64) -> f64 {
    const TAU: f64 = 2.0 * PI;
    let mut y = x - TAU * libm::floor((x + PI) / TAU);
    if y > PI {
        y -= TAU;
    }
    if y <= -PI {
        y += TAU;
    }
    y
}

/// Generates a bit stream for the `fair`, `biased`, and `markov` kinds.
pub fn generate_bits(cfg: &SourceConfig) -> Result<BitStream> {
    cfg.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    match cfg.kind {
        SourceKind::Fair => {
            let words: Vec<u64> = (0..cfg.n.div_ceil(64)).map(|_| rng.next_u64()).collect();
            BitStream::from_words(words, cfg.n, Origin::Simulated)
        }
        SourceKind::Biased { p_one } => {
            let mut b = Builder::with_capacity(Origin::Simulated, cfg.n);
            for _ in 0..cfg.n {
                b.push(uniform_co(&mut rng) < p_one);
            }
            Ok(b.finish())
        }
        SourceKind::Markov {
            p_one_given_zero,
            p_one_given_one,
        } => {
            let p10 = p_one_given_zero;
            let p01 = 1.0 - p_one_given_one;
            // Stationary P(1); for a frozen chain (both transition rates
            // zero) fall back to an even first draw.
            let pi_one = if p10 + p01 > 0.0 { p10 / (p10 + p01) } else { 0.5 };
            let mut b = Builder::with_capacity(Origin::Simulated, cfg.n);
            let mut prev = false;
            for i in 0..cfg.n {
                let p = if i == 0 {
                    pi_one
                } else if prev {
                    p_one_given_one
                } else {
                    p_one_given_zero
                };
                prev = uniform_co(&mut rng) < p;
                b.push(prev);
            }
            Ok(b.finish())
        }
        SourceKind::P2Toy { .. } => Err(Error::InvalidArgument(
            "p2-toy produces phase traces; use generate_phase_trace",
        )),
    }
}

fn p2_generate(cfg: &SourceConfig) -> Result<(PhaseTrace, BitStream)> {
    cfg.validate()?;
    let SourceKind::P2Toy {
        phase_sigma,
        control_bias_amplitude,
    } = cfg.kind
    else {
        return Err(Error::InvalidArgument(
            "generate_phase_trace requires the p2-toy kind",
        ));
    };
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut entries = Vec::with_capacity(cfg.n);
    let mut signs = Builder::with_capacity(Origin::Simulated, cfg.n);
    for i in 0..cfg.n {
        let bit = uniform_co(&mut rng) < 0.5;
        signs.push(bit);
        let center = if bit { PI / 2.0 } else { -PI / 2.0 };
        let toss = wrap_phase(center + phase_sigma * standard_normal(&mut rng));
        // Control phase: uniform on (-pi, pi] with a 1 + a cos(2 phi)
        // density ripple, drawn by rejection.
        let control = loop {
            let phi = PI - 2.0 * PI * uniform_co(&mut rng);
            if control_bias_amplitude == 0.0 {
                break phi;
            }
            let accept = uniform_co(&mut rng) * (1.0 + control_bias_amplitude);
            if accept <= 1.0 + control_bias_amplitude * libm::cos(2.0 * phi) {
                break phi;
            }
        };
        entries.push(PhaseSample {
            index: i as u64,
            control_phase: control,
            toss_phase: toss,
        });
    }
    Ok((PhaseTrace::new(entries)?, signs.finish()))
}

/// Generates a phase trace for the `p2-toy` kind.
pub fn generate_phase_trace(cfg: &SourceConfig) -> Result<PhaseTrace> {
    Ok(p2_generate(cfg)?.0)
}

/// The sign sequence underlying [`generate_phase_trace`] for the same
/// config: ground truth for threshold-recovery checks.
pub fn p2_expected_bits(cfg: &SourceConfig) -> Result<BitStream> {
    Ok(p2_generate(cfg)?.1)
}
