//! Non-neural reference policies: a lightweight genetic search run per
//! codebook precoder, uniform random decisions, and exhaustive enumeration
//! for small instances.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{invalid_config, invalid_input, Result};
use crate::mbacnn::Action;
use crate::numerics::{child_seed, SimRng};
use crate::system::{snr, Codebook, LinkBudget, PhaseConfig};

/// `m v` as an affine function of the binary phase symbols: for symbol
/// `s_i` the element contributes `-s_i a_i`.
struct LinearGain {
    direct: Complex64,
    elements: Vec<Complex64>,
}

impl LinearGain {
    fn new(cs: &ChannelSet, v: &[Complex64]) -> Self {
        let direct = cs.h.as_slice().iter().zip(v).map(|(h, x)| h.conj() * x).sum();
        let mut elements = Vec::with_capacity(cs.ris_count() * cs.n_ris());
        for (h1, h2) in cs.h1.iter().zip(&cs.h2) {
            let n = h1.cols();
            for i in 0..n {
                let col: Complex64 = (0..h1.rows()).map(|t| h1.get(t, i).conj() * v[t]).sum();
                elements.push(h2.get(i, 0).conj() * col);
            }
        }
        Self { direct, elements }
    }

    fn gamma(&self, bits: &[i32], ratio: f64) -> f64 {
        let g: Complex64 = self.direct
            + self
                .elements
                .iter()
                .zip(bits)
                .map(|(a, &s)| if s == 1 { -a } else { *a })
                .sum::<Complex64>();
        ratio * g.norm_sqr()
    }
}

fn split_phases(bits: &[i32], ris_count: usize) -> Result<Vec<PhaseConfig>> {
    let n = bits.len() / ris_count;
    bits.chunks(n).map(|c| PhaseConfig::binary(c.to_vec())).collect()
}

/// A decision with its SNR and the number of candidate SNR evaluations
/// spent finding it.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub phases: Vec<PhaseConfig>,
    pub precoder_index: usize,
    pub gamma: f64,
    pub evaluations: usize,
}

impl SearchResult {
    pub fn action(&self) -> Action {
        Action {
            phases: self.phases.clone(),
            precoder_index: self.precoder_index,
        }
    }
}

/// Settings of the per-precoder genetic search. Parents are drawn with
/// probability proportional to rank, recombined by single-point crossover
/// and mutated by independent bit flips; the best `elitism` strings carry
/// over unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LgaParams {
    pub individuals: usize,
    pub generations: usize,
    /// Bit-flip probability; `None` means `1 / string length`.
    pub p_mut: Option<f64>,
    pub elitism: usize,
}

impl Default for LgaParams {
    fn default() -> Self {
        Self {
            individuals: 15,
            generations: 5,
            p_mut: None,
            elitism: 1,
        }
    }
}

impl LgaParams {
    pub fn validate(&self) -> Result<()> {
        if self.individuals < 2 {
            return Err(invalid_config("lga.individuals must be at least 2"));
        }
        if self.elitism >= self.individuals {
            return Err(invalid_config("lga.elitism must be below lga.individuals"));
        }
        if let Some(p) = self.p_mut {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid_config(format!("lga.p_mut must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i32> {
    (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect()
}

/// Rank-proportional pick from a population sorted best first.
fn rank_select<R: Rng + ?Sized>(len: usize, rng: &mut R) -> usize {
    let total = len * (len + 1) / 2;
    let mut ticket = rng.random_range(0..total);
    for i in 0..len {
        let weight = len - i;
        if ticket < weight {
            return i;
        }
        ticket -= weight;
    }
    len - 1
}

fn lga_single<R: Rng + ?Sized>(
    gain: &LinearGain,
    ratio: f64,
    n: usize,
    params: &LgaParams,
    initial: Option<&[Vec<i32>]>,
    rng: &mut R,
) -> (Vec<i32>, f64, usize) {
    let p_mut = params.p_mut.unwrap_or(1.0 / n as f64);
    let mut pop: Vec<Vec<i32>> = match initial {
        Some(init) => init.to_vec(),
        None => (0..params.individuals).map(|_| random_bits(n, rng)).collect(),
    };
    let mut evaluations = 0;
    let mut score = |pop: Vec<Vec<i32>>| -> Vec<(f64, Vec<i32>)> {
        let mut scored: Vec<(f64, Vec<i32>)> = pop.into_iter().map(|b| (gain.gamma(&b, ratio), b)).collect();
        evaluations += scored.len();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        scored
    };
    let mut scored = score(std::mem::take(&mut pop));
    let mut best = scored[0].clone();
    for _ in 0..params.generations {
        let mut next: Vec<Vec<i32>> = scored.iter().take(params.elitism).map(|(_, b)| b.clone()).collect();
        while next.len() < scored.len() {
            let a = &scored[rank_select(scored.len(), rng)].1;
            let b = &scored[rank_select(scored.len(), rng)].1;
            let cut = if n > 1 { rng.random_range(1..n) } else { 0 };
            let mut child: Vec<i32> = a[..cut].iter().chain(&b[cut..]).copied().collect();
            for s in child.iter_mut() {
                if rng.random_bool(p_mut) {
                    *s = -*s;
                }
            }
            next.push(child);
        }
        let elites: Vec<(f64, Vec<i32>)> = scored.drain(..params.elitism).collect();
        let mut fresh = score(next.split_off(params.elitism));
        fresh.extend(elites);
        fresh.sort_by(|a, b| b.0.total_cmp(&a.0));
        scored = fresh;
        if scored[0].0 > best.0 {
            best = scored[0].clone();
        }
    }
    (best.1, best.0, evaluations)
}

/// Genetic search over phase strings for every codebook vector, keeping the
/// best pair overall.
pub fn lga_solve<R: Rng + ?Sized>(
    cs: &ChannelSet,
    budget: LinkBudget,
    codebook: &Codebook,
    params: &LgaParams,
    rng: &mut R,
) -> Result<SearchResult> {
    lga_solve_seeded(cs, budget, codebook, params, None, rng)
}

/// As [`lga_solve`], optionally starting every search from `initial`.
pub fn lga_solve_seeded<R: Rng + ?Sized>(
    cs: &ChannelSet,
    budget: LinkBudget,
    codebook: &Codebook,
    params: &LgaParams,
    initial: Option<&[Vec<i32>]>,
    rng: &mut R,
) -> Result<SearchResult> {
    params.validate()?;
    let n = cs.ris_count() * cs.n_ris();
    if let Some(init) = initial {
        if init.len() != params.individuals || init.iter().any(|b| b.len() != n || b.iter().any(|&s| s != 1 && s != -1)) {
            return Err(invalid_input("initial LGA population does not match the search space"));
        }
    }
    let base = rng.next_u64();
    let mut best: Option<(f64, Vec<i32>, usize)> = None;
    let mut evaluations = 0;
    for (j, v) in codebook.vectors().iter().enumerate() {
        let gain = LinearGain::new(cs, v.as_slice());
        let mut inner = SimRng::seeded(child_seed(base, "lga-precoder", j as u64));
        let (bits, g, evals) = lga_single(&gain, budget.ratio(), n, params, initial, &mut inner);
        evaluations += evals;
        if best.as_ref().is_none_or(|(bg, _, _)| g > *bg) {
            best = Some((g, bits, j));
        }
    }
    let (_, bits, j) = best.expect("codebook is non-empty");
    let phases = split_phases(&bits, cs.ris_count())?;
    let gamma = snr(cs, &phases, codebook.get(j), budget)?;
    Ok(SearchResult {
        phases,
        precoder_index: j,
        gamma,
        evaluations,
    })
}

/// Largest search space the oracle accepts by default.
pub const ORACLE_CAP: u64 = 1 << 20;

/// Exact maximizer by enumeration. Ties go to the lexicographically smallest
/// phase string (with `-1 < +1`), then to the lowest precoder index.
pub fn exhaustive_oracle(cs: &ChannelSet, budget: LinkBudget, codebook: &Codebook) -> Result<SearchResult> {
    exhaustive_oracle_capped(cs, budget, codebook, ORACLE_CAP)
}

pub fn exhaustive_oracle_capped(cs: &ChannelSet, budget: LinkBudget, codebook: &Codebook, cap: u64) -> Result<SearchResult> {
    let n = cs.ris_count() * cs.n_ris();
    let space = u32::try_from(n)
        .ok()
        .and_then(|n| 1u64.checked_shl(n))
        .and_then(|s| s.checked_mul(codebook.len() as u64));
    match space {
        Some(s) if s <= cap => {}
        _ => {
            return Err(invalid_input(format!(
                "exhaustive search over {n} elements and {} precoders exceeds the cap {cap}",
                codebook.len()
            )))
        }
    }
    let gains: Vec<LinearGain> = codebook.vectors().iter().map(|v| LinearGain::new(cs, v.as_slice())).collect();
    let ratio = budget.ratio();
    let mut bits = vec![-1; n];
    let mut best = (f64::NEG_INFINITY, 0u64, 0usize);
    for code in 0..(1u64 << n) {
        // element 0 is the most significant position, so codes ascend lexicographically
        for (i, s) in bits.iter_mut().enumerate() {
            *s = if code >> (n - 1 - i) & 1 == 1 { 1 } else { -1 };
        }
        for (j, g) in gains.iter().enumerate() {
            let gamma = g.gamma(&bits, ratio);
            if gamma > best.0 {
                best = (gamma, code, j);
            }
        }
    }
    let (_, code, j) = best;
    let bits: Vec<i32> = (0..n).map(|i| if code >> (n - 1 - i) & 1 == 1 { 1 } else { -1 }).collect();
    let phases = split_phases(&bits, cs.ris_count())?;
    let gamma = snr(cs, &phases, codebook.get(j), budget)?;
    Ok(SearchResult {
        phases,
        precoder_index: j,
        gamma,
        evaluations: (1usize << n) * codebook.len(),
    })
}

/// Uniform random phases for every RIS and a uniform precoder index.
pub fn random_baseline<R: Rng + ?Sized>(cs: &ChannelSet, codebook: &Codebook, rng: &mut R) -> Result<Action> {
    let phases = (0..cs.ris_count())
        .map(|_| PhaseConfig::binary(random_bits(cs.n_ris(), rng)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Action {
        phases,
        precoder_index: rng.random_range(0..codebook.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel_set, ScenarioConfig};
    use crate::numerics::ComplexMatrix;
    use crate::system::dft_codebook;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_set(n_tx: usize, n_ris: usize, k: usize, rng: &mut SimRng) -> ChannelSet {
        let mut r = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        ChannelSet {
            h: ComplexMatrix::from_fn(n_tx, 1, |_, _| r()),
            h1: (0..k).map(|_| ComplexMatrix::from_fn(n_tx, n_ris, |_, _| r())).collect(),
            h2: (0..k).map(|_| ComplexMatrix::from_fn(n_ris, 1, |_, _| r())).collect(),
        }
    }

    fn unit_budget() -> LinkBudget {
        LinkBudget::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn linear_gain_matches_snr() {
        let mut rng = SimRng::seeded(1);
        let cs = random_set(3, 5, 2, &mut rng);
        let cb = dft_codebook(3);
        for _ in 0..20 {
            let a = random_baseline(&cs, &cb, &mut rng).unwrap();
            let bits: Vec<i32> = a.phases.iter().flat_map(|p| p.values().to_vec()).collect();
            let g = LinearGain::new(&cs, cb.get(a.precoder_index).as_slice()).gamma(&bits, 2.5);
            let s = snr(&cs, &a.phases, cb.get(a.precoder_index), LinkBudget::new(2.5, 1.0).unwrap()).unwrap();
            assert!((g - s).abs() <= 1e-12 * s.max(1.0));
        }
    }

    #[test]
    fn zero_channels() {
        let cs = ChannelSet {
            h: ComplexMatrix::zeros(2, 1),
            h1: vec![ComplexMatrix::zeros(2, 3)],
            h2: vec![ComplexMatrix::zeros(3, 1)],
        };
        let cb = dft_codebook(2);
        let r = lga_solve(&cs, unit_budget(), &cb, &LgaParams::default(), &mut SimRng::seeded(1)).unwrap();
        assert_eq!(r.gamma, 0.0);
        let o = exhaustive_oracle(&cs, unit_budget(), &cb).unwrap();
        assert_eq!(o.gamma, 0.0);
        assert_eq!(o.phases[0].values(), &[-1, -1, -1]);
        assert_eq!(o.precoder_index, 0);
    }

    #[test]
    fn single_element_cases() {
        let mut rng = SimRng::seeded(2);
        for _ in 0..50 {
            let mut cs = random_set(2, 1, 1, &mut rng);
            cs.h = ComplexMatrix::zeros(2, 1);
            cs.h.set(0, 0, c(0.3, -0.1));
            let cb = dft_codebook(2);
            let (plus, minus) = (
                snr(&cs, &[PhaseConfig::binary(vec![1]).unwrap()], cb.get(0), unit_budget()).unwrap(),
                snr(&cs, &[PhaseConfig::binary(vec![-1]).unwrap()], cb.get(0), unit_budget()).unwrap(),
            );
            let params = LgaParams { individuals: 2, generations: 0, ..LgaParams::default() };
            let single = Codebook::from_vectors(vec![cb.get(0).clone()]).unwrap();
            let r = lga_solve_seeded(&cs, unit_budget(), &single, &params, Some(&[vec![1], vec![-1]]), &mut rng).unwrap();
            assert_eq!(r.gamma, plus.max(minus));
            assert_eq!(r.phases[0].values()[0], if plus > minus { 1 } else { -1 });
        }
    }

    #[test]
    fn oracle_scalar_sign_rule() {
        let mut rng = SimRng::seeded(3);
        for _ in 0..50 {
            let mut cs = random_set(2, 1, 1, &mut rng);
            cs.h = ComplexMatrix::zeros(2, 1);
            let cb = dft_codebook(2);
            let o = exhaustive_oracle(&cs, unit_budget(), &cb).unwrap();
            // with no direct link both signs give the same magnitude, so the
            // tie-break picks -1 and the precoder with the larger cascade gain
            assert_eq!(o.phases[0].values(), &[-1]);
            let g: Vec<f64> = (0..2)
                .map(|j| snr(&cs, &[PhaseConfig::binary(vec![-1]).unwrap()], cb.get(j), unit_budget()).unwrap())
                .collect();
            assert_eq!(o.precoder_index, usize::from(g[1] > g[0]));
        }
    }

    #[test]
    fn oracle_dominates_random_samples() {
        let mut rng = SimRng::seeded(4);
        let cs = random_set(2, 4, 1, &mut rng);
        let cb = dft_codebook(2);
        let o = exhaustive_oracle(&cs, unit_budget(), &cb).unwrap();
        for _ in 0..1000 {
            let a = random_baseline(&cs, &cb, &mut rng).unwrap();
            let g = snr(&cs, &a.phases, cb.get(a.precoder_index), unit_budget()).unwrap();
            assert!(g <= o.gamma * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lga_bounded_by_oracle() {
        let mut rng = SimRng::seeded(5);
        let cb = dft_codebook(2);
        for _ in 0..10 {
            let cs = random_set(2, 10, 1, &mut rng);
            let o = exhaustive_oracle(&cs, unit_budget(), &cb).unwrap();
            let l = lga_solve(&cs, unit_budget(), &cb, &LgaParams::default(), &mut rng).unwrap();
            assert!(l.gamma <= o.gamma * (1.0 + 1e-12));
            assert!(l.evaluations > 0);
        }
    }

    #[test]
    fn lga_non_decreasing_in_generations() {
        let mut rng = SimRng::seeded(6);
        let cs = random_set(2, 12, 1, &mut rng);
        let cb = dft_codebook(2);
        let mut last = 0.0;
        for generations in 0..8 {
            let p = LgaParams { generations, ..LgaParams::default() };
            let r = lga_solve(&cs, unit_budget(), &cb, &p, &mut SimRng::seeded(77)).unwrap();
            assert!(r.gamma >= last);
            last = r.gamma;
        }
    }

    #[test]
    fn oracle_permutation_consistent() {
        let mut rng = SimRng::seeded(7);
        let cs = random_set(2, 5, 1, &mut rng);
        let cb = dft_codebook(2);
        let perm = [3, 0, 4, 1, 2];
        let permuted = ChannelSet {
            h: cs.h.clone(),
            h1: vec![ComplexMatrix::from_fn(2, 5, |t, i| cs.h1[0].get(t, perm[i]))],
            h2: vec![ComplexMatrix::from_fn(5, 1, |i, _| cs.h2[0].get(perm[i], 0))],
        };
        let a = exhaustive_oracle(&cs, unit_budget(), &cb).unwrap();
        let b = exhaustive_oracle(&permuted, unit_budget(), &cb).unwrap();
        assert!((a.gamma - b.gamma).abs() <= 1e-12 * a.gamma);
        let expected: Vec<i32> = (0..5).map(|i| a.phases[0].values()[perm[i]]).collect();
        assert_eq!(b.phases[0].values(), expected.as_slice());
    }

    #[test]
    fn oracle_cap() {
        let mut cfg = ScenarioConfig::desk();
        cfg.n_ris = 25;
        let cs = sample_channel_set(&cfg, &mut SimRng::seeded(1)).unwrap();
        let err = exhaustive_oracle(&cs, unit_budget(), &dft_codebook(4));
        assert!(matches!(err, Err(crate::Error::InvalidInput(_))));
    }

    #[test]
    fn random_baseline_statistics() {
        let mut rng = SimRng::seeded(8);
        let cs = random_set(2, 1, 1, &mut rng);
        let cb = dft_codebook(2);
        let n = 10_000;
        let plus = (0..n)
            .filter(|_| random_baseline(&cs, &cb, &mut rng).unwrap().phases[0].values()[0] == 1)
            .count();
        assert!((plus as f64 / n as f64 - 0.5).abs() <= 0.015);
        let a = random_baseline(&cs, &cb, &mut SimRng::seeded(1)).unwrap();
        let b = random_baseline(&cs, &cb, &mut SimRng::seeded(1)).unwrap();
        assert_eq!(a, b);
    }
}
