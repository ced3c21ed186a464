//! Types, type classes and the exhaustive checks built on them.

use rayon::prelude::*;

use crate::ehmodel::DmcSpec;
use crate::error::{domain, Result};
use crate::hypotest::beta_discrete_exact;

const MAX_TYPE_N: usize = 20;
const MAX_TYPE_ALPHABET: usize = 4;
// cap on |𝒳|ⁿ for anything that walks sequences
const MAX_SEQUENCES: usize = 1 << 22;

/// Composition of a length-n sequence: how often each symbol occurs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeVector {
    counts: Vec<u32>,
    n: u32,
}

impl TypeVector {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return domain("a type needs a nonempty alphabet");
        }
        let n = counts.iter().sum();
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// The empirical distribution `N(x|x)/n`.
    pub fn distribution(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// `Σ_x P(x)Λ(x)`.
    pub fn mean_cost(&self, costs: &[f64]) -> f64 {
        self.distribution().iter().zip(costs).map(|(p, c)| p * c).sum()
    }

    /// `|𝒯_P|`, the multinomial coefficient.
    pub fn class_size(&self) -> u128 {
        let mut out: u128 = 1;
        let mut placed: u128 = 0;
        for &c in &self.counts {
            for k in 1..=c as u128 {
                placed += 1;
                out = out * placed / k;
            }
        }
        out
    }

    /// Every sequence of this type, in lexicographic order.
    pub fn members(&self) -> Result<Vec<Vec<usize>>> {
        if self.class_size() > MAX_SEQUENCES as u128 {
            return domain("type class too large to enumerate");
        }
        let mut seq: Vec<usize> = self
            .counts
            .iter()
            .enumerate()
            .flat_map(|(x, &c)| std::iter::repeat_n(x, c as usize))
            .collect();
        let mut out = vec![seq.clone()];
        while next_permutation(&mut seq) {
            out.push(seq.clone());
        }
        Ok(out)
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let Some(i) = (0..v.len() - 1).rev().find(|&i| v[i] < v[i + 1]) else {
        return false;
    };
    let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

/// Type of a sequence over `{0, …, alphabet_size−1}`.
pub fn type_of_sequence(seq: &[usize], alphabet_size: usize) -> Result<TypeVector> {
    let mut counts = vec![0u32; alphabet_size];
    for &x in seq {
        if x >= alphabet_size {
            return domain(format!("symbol {x} outside alphabet of size {alphabet_size}"));
        }
        counts[x] += 1;
    }
    TypeVector::new(counts)
}

/// All types of length-n sequences, each once, in lexicographic order of the
/// count vectors.
pub fn enumerate_types(alphabet_size: usize, n: usize) -> Result<Vec<TypeVector>> {
    if alphabet_size == 0 || alphabet_size > MAX_TYPE_ALPHABET || n > MAX_TYPE_N {
        return domain(format!(
            "type enumeration is exhaustive-only: need 1 <= alphabet <= {MAX_TYPE_ALPHABET} and n <= {MAX_TYPE_N}"
        ));
    }
    fn rec(left: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<TypeVector>) {
        if slots == 1 {
            prefix.push(left);
            out.push(TypeVector::new(prefix.clone()).unwrap());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(left - c, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n as u32, alphabet_size, &mut Vec::new(), &mut out);
    Ok(out)
}

/// All `alphabet_sizeⁿ` sequences in lexicographic order.
pub fn all_sequences(alphabet_size: usize, n: usize) -> Result<Vec<Vec<usize>>> {
    let total = (alphabet_size as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if alphabet_size == 0 || total > MAX_SEQUENCES as u128 {
        return domain(format!("{alphabet_size}^{n} sequences is beyond the exhaustive regime"));
    }
    Ok((0..total as usize)
        .map(|mut idx| {
            let mut s = vec![0; n];
            for k in (0..n).rev() {
                s[k] = idx % alphabet_size;
                idx /= alphabet_size;
            }
            s
        })
        .collect())
}

fn within_budget(total_cost: f64, n: usize, a: f64) -> bool {
    let cap = n as f64 * a;
    total_cost <= cap + 1e-12 * (1.0 + cap)
}

/// Both sides of the type-transformation identity: the supremum of `h` over
/// cost-feasible sequences, and the supremum over feasible types of the
/// supremum over each type class.
pub fn ttt_sides(ch: &DmcSpec, a: f64, n: usize, h: &(dyn Fn(&[usize]) -> f64 + Sync)) -> Result<(f64, f64)> {
    let k = ch.input_size();
    let costs = ch.costs();
    let lhs = all_sequences(k, n)?
        .par_iter()
        .filter(|x| within_budget(x.iter().map(|&s| costs[s]).sum(), n, a))
        .map(|x| h(x))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let rhs = enumerate_types(k, n)?
        .into_iter()
        .filter(|t| within_budget(t.mean_cost(costs) * n as f64, n, a))
        .map(|t| {
            t.members()
                .map(|m| m.par_iter().map(|x| h(x)).reduce(|| f64::NEG_INFINITY, f64::max))
        })
        .try_fold(f64::NEG_INFINITY, |acc, v| v.map(|v| acc.max(v)))?;
    Ok((lhs, rhs))
}

/// True when the two sides of [`ttt_sides`] agree within 1e-12.
pub fn ttt_check(ch: &DmcSpec, a: f64, n: usize, h: &(dyn Fn(&[usize]) -> f64 + Sync)) -> Result<bool> {
    let (l, r) = ttt_sides(ch, a, n, h)?;
    Ok((l - r).abs() <= 1e-12 * (1.0 + l.abs()))
}

fn check_small(ch: &DmcSpec, q_y: &[f64], n: usize) -> Result<()> {
    if ch.input_size() > 3 || ch.output_size() > 3 || n > 6 {
        return domain("beta invariance check needs |X|, |Y| <= 3 and n <= 6");
    }
    if q_y.len() != ch.output_size() {
        return domain("reference law has the wrong length");
    }
    if q_y.iter().any(|&q| !(q >= 0.0)) || (q_y.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return domain("reference law must be a probability vector");
    }
    Ok(())
}

// Wⁿ(·|x) and q_yⁿ over 𝒴ⁿ in lexicographic order. Factors are multiplied
// in sorted (x, y) order so that permuted inputs give bit-identical values.
fn product_laws(ch: &DmcSpec, q_y: &[f64], x: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let ny = ch.output_size();
    let total = ny.pow(x.len() as u32);
    let mut pairs = vec![(0usize, 0usize); x.len()];
    (0..total)
        .map(|mut idx| {
            for k in (0..x.len()).rev() {
                pairs[k] = (x[k], idx % ny);
                idx /= ny;
            }
            pairs.sort_unstable();
            pairs.iter().fold((1.0, 1.0), |(p, q), &(xk, y)| (p * ch.w(xk, y), q * q_y[y]))
        })
        .unzip()
}

/// The `(Wⁿ(y|x), q_yⁿ(y))` pairs over all `y`, sorted. Two inputs of the same
/// type give the same profile.
pub fn sorted_lr_profile(ch: &DmcSpec, q_y: &[f64], x: &[usize]) -> Vec<(f64, f64)> {
    let (p, q) = product_laws(ch, q_y, x);
    let mut v: Vec<(f64, f64)> = p.into_iter().zip(q).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Spread (max − min) of `β_α(Wⁿ(·|x), q_yⁿ)` over all `x` of the given type.
pub fn beta_type_invariance_check(ch: &DmcSpec, q_y: &[f64], ty: &TypeVector, alpha: f64) -> Result<f64> {
    check_small(ch, q_y, ty.n() as usize)?;
    if ty.alphabet_size() != ch.input_size() {
        return domain("type alphabet does not match the channel input");
    }
    let betas = ty
        .members()?
        .par_iter()
        .map(|x| {
            let (p, q) = product_laws(ch, q_y, x);
            beta_discrete_exact(&p, &q, alpha).map(|r| r.beta)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lo = betas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = betas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(hi - lo)
}
