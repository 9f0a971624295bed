use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal};

use crate::error::{invalid_input, Result};
use crate::numerics::RealMatrix;

/// Uniform crossover: every gene comes from `p1` or `p2` with probability
/// one half. A set bit of the random stream selects `p1`.
pub fn crossover<R: Rng + ?Sized>(p1: &[f64], p2: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if p1.len() != p2.len() {
        return Err(invalid_input(format!(
            "parents have lengths {} and {}",
            p1.len(),
            p2.len()
        )));
    }
    let mut child = Vec::with_capacity(p1.len());
    for (a, b) in p1.chunks(64).zip(p2.chunks(64)) {
        let bits = rng.next_u64();
        child.extend(a.iter().zip(b).enumerate().map(|(i, (&x, &y))| if bits >> i & 1 == 1 { x } else { y }));
    }
    Ok(child)
}

/// Indices in `0..n` each selected independently with probability `p`,
/// visited by geometric skipping.
pub(crate) fn bernoulli_indices<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R, mut visit: impl FnMut(usize)) {
    if p <= 0.0 || n == 0 {
        return;
    }
    if p >= 1.0 {
        (0..n).for_each(visit);
        return;
    }
    let gaps = Geometric::new(p).expect("p in (0, 1)");
    let mut i = 0usize;
    loop {
        let skip = gaps.sample(rng);
        i = match usize::try_from(skip).ok().and_then(|s| i.checked_add(s)) {
            Some(j) if j < n => j,
            _ => return,
        };
        visit(i);
        i += 1;
    }
}

/// Adds `N(0, sigma^2)` noise to each gene with probability `p_mut`.
pub fn mutate<R: Rng + ?Sized>(genome: &mut [f64], p_mut: f64, sigma_mut: f64, rng: &mut R) -> Result<()> {
    if !(0.0..=1.0).contains(&p_mut) || !(sigma_mut >= 0.0) || !sigma_mut.is_finite() {
        return Err(invalid_input(format!(
            "mutation needs 0 <= p_mut <= 1 and finite sigma_mut >= 0, got {p_mut}, {sigma_mut}"
        )));
    }
    let noise = Normal::new(0.0, sigma_mut).expect("validated sigma");
    let mut picked = Vec::new();
    bernoulli_indices(genome.len(), p_mut, rng, |i| picked.push(i));
    for i in picked {
        genome[i] += noise.sample(rng);
    }
    Ok(())
}

/// `p = 1 - (f / f_max)^(1/M)` per individual, evaluated as
/// `-expm1(ln(f / f_max) / M)`. A zero `f_max` gives all zeros.
pub fn permutation_probabilities(fitness: &[f64], f_max: f64, m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(invalid_input("genome length must be positive"));
    }
    if fitness.iter().any(|f| !(*f >= 0.0)) || !(f_max >= 0.0) {
        return Err(invalid_input("fitness values must be non-negative"));
    }
    if f_max == 0.0 {
        return Ok(vec![0.0; fitness.len()]);
    }
    Ok(fitness
        .iter()
        .map(|&f| {
            let ratio = (f / f_max).min(1.0);
            (-(ratio.ln() / m as f64).exp_m1()).clamp(0.0, 1.0)
        })
        .collect())
}

/// Marks gene `(l, m)` with probability `p_perm[l]` and shuffles the
/// marked values within each column. Returns the number of marked genes.
pub fn permute_marked<R: Rng + ?Sized>(weights: &mut RealMatrix, p_perm: &[f64], rng: &mut R) -> Result<usize> {
    let (rows, cols) = weights.shape();
    if p_perm.len() != rows {
        return Err(invalid_input(format!(
            "{} permutation probabilities for {rows} individuals",
            p_perm.len()
        )));
    }
    let mut marked: Vec<(usize, usize)> = Vec::new();
    for (l, &p) in p_perm.iter().enumerate() {
        bernoulli_indices(cols, p, rng, |m| marked.push((m, l)));
    }
    marked.sort_unstable();
    let count = marked.len();
    let mut start = 0;
    while start < marked.len() {
        let col = marked[start].0;
        let end = start + marked[start..].iter().take_while(|(c, _)| *c == col).count();
        if end - start > 1 {
            let rows_marked: Vec<usize> = marked[start..end].iter().map(|&(_, l)| l).collect();
            let mut values: Vec<f64> = rows_marked.iter().map(|&l| weights.get(l, col)).collect();
            values.shuffle(rng);
            for (&l, v) in rows_marked.iter().zip(values) {
                weights.set(l, col, v);
            }
        }
        start = end;
    }
    Ok(count)
}
