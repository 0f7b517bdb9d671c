//! Convex fit of a density operator by product states.
//!
//! The dictionary holds pure products `F₁F₂|0⟩`, with `F_k` a fixed-parity
//! polynomial in the creation operators of block `k`. It always contains every
//! occupation-basis state; further atoms are drawn from a seeded generator.
//! Weights solve `min ‖ρ − Σ λ_k ρ_k‖_F` over the probability simplex.
//!
//! A small residual only says the state looks separable on what the dictionary
//! can reach; a large one proves nothing. Entanglement is certified by the
//! witness search, not here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bipartition::Bipartition;
use crate::car_ops::apply_word;
use crate::fock::{DensityOperator, FockVector};
use crate::opalg::{Factor, ModeSet};
use crate::{Error, Result};

/// One dictionary element: block factors and their product vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductAtom {
    pub first: FockVector,
    pub second: FockVector,
    pub product: FockVector,
}

impl ProductAtom {
    /// Builds `F₁F₂|0⟩` from two vectors supported on their own blocks.
    pub fn new(first: FockVector, second: FockVector) -> Result<Self> {
        let modes = first.modes();
        if second.modes() != modes {
            return Err(Error::DimensionMismatch {
                expected: modes,
                found: second.modes(),
            });
        }
        let creators = |index: usize| -> Vec<Factor> {
            (1..=modes)
                .filter(|m| index >> (m - 1) & 1 == 1)
                .map(Factor::create)
                .collect()
        };
        let mut product = FockVector::zero(modes);
        for (i1, z1) in first.iter() {
            for (i2, z2) in second.iter() {
                if i1 & i2 != 0 {
                    return Err(Error::Domain("product factors overlap in support".into()));
                }
                let mut word = creators(i1);
                word.extend(creators(i2));
                let (sign, idx) = apply_word(0, &word).expect("disjoint creators");
                product.add(idx, z1 * z2 * sign);
            }
        }
        Ok(Self {
            first,
            second,
            product: product.normalized()?,
        })
    }

    pub fn density(&self) -> Result<DensityOperator> {
        DensityOperator::from_pure(&self.product)
    }
}

#[derive(Clone, Debug)]
pub struct SeparableFit {
    pub weights: Vec<f64>,
    pub dictionary: Vec<ProductAtom>,
    /// Frobenius distance `‖ρ − Σ λ_k ρ_k‖_F`.
    pub residual: f64,
}

impl SeparableFit {
    /// Atoms with weight above `1e-12`, heaviest first.
    pub fn support(&self) -> Vec<(f64, &ProductAtom)> {
        let mut s: Vec<(f64, &ProductAtom)> = self
            .weights
            .iter()
            .copied()
            .zip(&self.dictionary)
            .filter(|(w, _)| *w > 1e-12)
            .collect();
        s.sort_by(|a, b| b.0.total_cmp(&a.0));
        s
    }
}

fn block_mask(set: &ModeSet) -> usize {
    set.iter().fold(0, |acc, &m| acc | 1 << (m - 1))
}

/// Subsets of `mask` (as basis indices) with the given popcount parity.
fn block_patterns(mask: usize, parity: u32) -> Vec<usize> {
    let mut out = Vec::new();
    let mut sub = mask;
    loop {
        if sub.count_ones() % 2 == parity {
            out.push(sub);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    out.sort_unstable();
    out
}

fn random_block_vector(
    rng: &mut ChaCha8Rng,
    modes: usize,
    patterns: &[usize],
) -> Result<FockVector> {
    loop {
        let mut v = FockVector::zero(modes);
        for &k in patterns {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            v.add(k, z);
        }
        if v.norm() > 1e-3 {
            return v.normalized();
        }
    }
}

fn basis_vector(modes: usize, index: usize) -> FockVector {
    let mut v = FockVector::zero(modes);
    v.add(index, Complex64::new(1.0, 0.0));
    v
}

fn build_dictionary(b: &Bipartition, dict_size: usize, seed: u64) -> Result<Vec<ProductAtom>> {
    let modes = b.modes();
    let m1 = block_mask(b.first());
    let m2 = block_mask(b.second());
    let mut atoms = Vec::new();
    for k in 0..1usize << modes {
        atoms.push(ProductAtom::new(
            basis_vector(modes, k & m1),
            basis_vector(modes, k & m2),
        )?);
    }
    let patterns = [
        [block_patterns(m1, 0), block_patterns(m1, 1)],
        [block_patterns(m2, 0), block_patterns(m2, 1)],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..dict_size {
        let p1 = rng.gen_range(0..2usize);
        let p2 = rng.gen_range(0..2usize);
        let first = random_block_vector(&mut rng, modes, &patterns[0][p1])?;
        let second = random_block_vector(&mut rng, modes, &patterns[1][p2])?;
        atoms.push(ProductAtom::new(first, second)?);
    }
    Ok(atoms)
}

/// `min ½λᵀGλ − hᵀλ` subject to `λ ≥ 0`, `Σλ = 1`, by a primal active-set
/// method. Free-set subproblems solve the equality-constrained KKT system.
fn simplex_least_squares(gram: &DMatrix<f64>, lin: &DVector<f64>) -> DVector<f64> {
    let k = lin.len();
    let objective = |j: usize| 0.5 * gram[(j, j)] - lin[j];
    let start = (0..k)
        .min_by(|&a, &b| objective(a).total_cmp(&objective(b)))
        .expect("nonempty dictionary");
    let mut lambda = DVector::<f64>::zeros(k);
    lambda[start] = 1.0;
    let mut free = vec![start];

    for _ in 0..50 * k + 100 {
        let n = free.len();
        let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
        let mut rhs = DVector::<f64>::zeros(n + 1);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                kkt[(a, b)] = gram[(i, j)];
            }
            kkt[(a, n)] = 1.0;
            kkt[(n, a)] = 1.0;
            rhs[a] = lin[i];
        }
        rhs[n] = 1.0;
        let sol = kkt
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-13)
            .expect("svd solve");
        let x = sol.rows(0, n).into_owned();
        let nu = sol[n];

        if x.iter().all(|&v| v > 0.0) {
            for (a, &i) in free.iter().enumerate() {
                lambda[i] = x[a];
            }
            // multipliers of the fixed bounds: μ_j = (Gλ − h)_j + ν
            let grad = gram * &lambda - lin;
            let entering = (0..k)
                .filter(|j| !free.contains(j))
                .map(|j| (j, grad[j] + nu))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match entering {
                Some((j, mu)) if mu < -1e-12 => free.push(j),
                _ => break,
            }
        } else {
            // step toward x until the first free weight hits zero
            let mut alpha = 1.0f64;
            for (a, &i) in free.iter().enumerate() {
                if x[a] <= 0.0 {
                    let l = lambda[i];
                    let denom = l - x[a];
                    if denom > 0.0 {
                        alpha = alpha.min(l / denom);
                    }
                }
            }
            for (a, &i) in free.iter().enumerate() {
                lambda[i] += alpha * (x[a] - lambda[i]);
            }
            free.retain(|&i| {
                if lambda[i] <= 1e-15 {
                    lambda[i] = 0.0;
                    false
                } else {
                    true
                }
            });
            if free.is_empty() {
                free.push(start);
                lambda[start] = 1.0;
            }
        }
    }
    lambda
}

/// Convex fit of `rho` by `2^M` occupation products plus `dict_size` seeded
/// random parity-fixed products.
pub fn separable_fit(
    rho: &DensityOperator,
    b: &Bipartition,
    dict_size: usize,
    seed: u64,
) -> Result<SeparableFit> {
    if rho.modes() != b.modes() {
        return Err(Error::DimensionMismatch {
            expected: rho.modes(),
            found: b.modes(),
        });
    }
    let dictionary = build_dictionary(b, dict_size, seed)?;
    let k = dictionary.len();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut lin = DVector::<f64>::zeros(k);
    for i in 0..k {
        let vi = &dictionary[i].product;
        // h_i = ⟨v_i|ρ|v_i⟩
        let mut h = Complex64::new(0.0, 0.0);
        for (r, zr) in vi.iter() {
            for (c, zc) in vi.iter() {
                h += zr.conj() * rho.get(r, c) * zc;
            }
        }
        lin[i] = h.re;
        for j in i..k {
            let g = vi.inner(&dictionary[j].product).norm_sqr();
            gram[(i, j)] = g;
            gram[(j, i)] = g;
        }
    }
    let lambda = simplex_least_squares(&gram, &lin);
    let total: f64 = lambda.iter().map(|w| w.max(0.0)).sum();
    let weights: Vec<f64> = lambda.iter().map(|w| w.max(0.0) / total).collect();

    let mut diff = rho.matrix().clone();
    for (w, atom) in weights.iter().zip(&dictionary) {
        if *w == 0.0 {
            continue;
        }
        for (r, zr) in atom.product.iter() {
            for (c, zc) in atom.product.iter() {
                diff[(r, c)] -= zr * zc.conj() * *w;
            }
        }
    }
    let residual = diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(SeparableFit {
        weights,
        dictionary,
        residual,
    })
}
