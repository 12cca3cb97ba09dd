//! Datasets, finite discrete distributions over joint points (u, y), the
//! Gaussian synthetic data model, and CSV serialization.
//!
//! The synthetic model draws features with i.i.d. coordinates
//! u_j ~ N(feature_mean, feature_var) and labels y = x'u + noise with
//! noise ~ N(0, noise_std_sq). A nonnegative shift degree moves the
//! generating parameter to x + degree * [-0.05, 0.025] (two-dimensional
//! parameters only), which produces test distributions that drift away from
//! the training distribution as the degree grows.

use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RsError};

// ============================================================================
// Dataset
// ============================================================================

/// A finite sample of pairs (u_i, y_i) with features stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    m_u: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from feature rows and labels of matching length.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(RsError::shape(format!(
                "{} feature rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if rows.is_empty() {
            return Err(RsError::validation("dataset has no rows".to_string()));
        }
        let m_u = rows[0].len();
        if m_u == 0 {
            return Err(RsError::validation("feature rows are empty".to_string()));
        }
        let mut features = Vec::with_capacity(rows.len() * m_u);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m_u {
                return Err(RsError::shape(format!(
                    "row {} has {} features, expected {m_u}",
                    i + 1,
                    row.len()
                )));
            }
            features.extend_from_slice(row);
        }
        Ok(Dataset { m_u, features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension m_u.
    pub fn dim(&self) -> usize {
        self.m_u
    }

    /// The i-th feature row.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.m_u..(i + 1) * self.m_u]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// The joint point (u_i, y_i) as one vector of length m_u + 1.
    pub fn joint(&self, i: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.m_u + 1);
        v.extend_from_slice(self.row(i));
        v.push(self.labels[i]);
        v
    }
}

// ============================================================================
// Discrete distributions
// ============================================================================

/// A probability distribution with finite support: atoms are points in R^d,
/// weights are nonnegative and sum to one within 1e-12.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    dim: usize,
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(RsError::validation("distribution has no atoms".to_string()));
        }
        if atoms.len() != weights.len() {
            return Err(RsError::shape(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let dim = atoms[0].len();
        if dim == 0 {
            return Err(RsError::validation("atoms are zero-dimensional".to_string()));
        }
        let mut flat = Vec::with_capacity(atoms.len() * dim);
        for (i, a) in atoms.iter().enumerate() {
            if a.len() != dim {
                return Err(RsError::shape(format!(
                    "atom {} has dimension {}, expected {dim}",
                    i + 1,
                    a.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(RsError::validation(format!("atom {} is not finite", i + 1)));
            }
            flat.extend_from_slice(a);
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(RsError::validation("weights must be nonnegative".to_string()));
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(RsError::validation(format!(
                "weights sum to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(DiscreteDistribution { dim, atoms: flat, weights })
    }

    /// The empirical distribution of a dataset over joint points (u, y).
    /// Rows that agree bit-for-bit are merged and their masses added, so a
    /// three-row sample with one duplicated row yields weights {2/3, 1/3}.
    pub fn from_dataset(data: &Dataset) -> Self {
        let dim = data.dim() + 1;
        let w = 1.0 / data.len() as f64;
        let mut atoms: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut seen: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
        for i in 0..data.len() {
            let joint = data.joint(i);
            let key: Vec<u64> = joint.iter().map(|v| v.to_bits()).collect();
            match seen.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    weights[*e.get()] += w;
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(weights.len());
                    atoms.extend_from_slice(&joint);
                    weights.push(w);
                }
            }
        }
        DiscreteDistribution { dim, atoms, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Expectation of a function of the atom under this distribution.
    pub fn expect(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.atom(i))).sum()
    }

    /// Mixture t * self + (1 - t) * other with duplicate atoms merged.
    pub fn mixture(&self, other: &DiscreteDistribution, t: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(RsError::shape(format!(
                "mixture of dimensions {} and {}",
                self.dim, other.dim
            )));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(RsError::param(format!("mixture weight {t} outside [0,1]")));
        }
        let mut atoms: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut seen: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
        let mut push = |atom: &[f64], w: f64, atoms: &mut Vec<f64>, weights: &mut Vec<f64>| {
            let key: Vec<u64> = atom.iter().map(|v| v.to_bits()).collect();
            match seen.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => weights[*e.get()] += w,
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(weights.len());
                    atoms.extend_from_slice(atom);
                    weights.push(w);
                }
            }
        };
        for i in 0..self.len() {
            push(self.atom(i), t * self.weights[i], &mut atoms, &mut weights);
        }
        for i in 0..other.len() {
            push(other.atom(i), (1.0 - t) * other.weights[i], &mut atoms, &mut weights);
        }
        Ok(DiscreteDistribution { dim: self.dim, atoms, weights })
    }

    /// Interprets joint atoms as (u, y) rows and draws n i.i.d. samples.
    pub fn sample_dataset(&self, n: usize, rng: &mut impl Rng) -> Result<Dataset> {
        if self.dim < 2 {
            return Err(RsError::unsupported(
                "sampling (u, y) pairs needs joint atoms of dimension at least 2".to_string(),
            ));
        }
        if n == 0 {
            return Err(RsError::param("sample size must be positive".to_string()));
        }
        let idx = WeightedIndex::new(&self.weights)
            .map_err(|e| RsError::validation(format!("invalid sampling weights: {e}")))?;
        let m_u = self.dim - 1;
        let mut features = Vec::with_capacity(n * m_u);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let a = self.atom(idx.sample(rng));
            features.extend_from_slice(&a[..m_u]);
            labels.push(a[m_u]);
        }
        Ok(Dataset { m_u, features, labels })
    }
}

// ============================================================================
// Synthetic model
// ============================================================================

fn default_m_u() -> usize {
    2
}

fn default_x_star() -> Vec<f64> {
    vec![2.0, -1.0]
}

fn default_noise() -> f64 {
    0.1
}

fn default_feature_mean() -> f64 {
    0.5
}

fn default_feature_var() -> f64 {
    0.5
}

/// Parameters of the Gaussian linear data model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Feature dimension.
    #[serde(default = "default_m_u")]
    pub m_u: usize,
    /// Generating parameter; must have m_u entries.
    #[serde(default = "default_x_star")]
    pub x_star: Vec<f64>,
    /// Shift degree: 0 keeps the training distribution, larger values move
    /// the generating parameter along [-0.05, 0.025] per unit.
    #[serde(default)]
    pub degree: f64,
    /// Label noise variance.
    #[serde(default = "default_noise")]
    pub noise_std_sq: f64,
    /// Mean of each feature coordinate.
    #[serde(default = "default_feature_mean")]
    pub feature_mean: f64,
    /// Variance of each feature coordinate.
    #[serde(default = "default_feature_var")]
    pub feature_var: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            m_u: default_m_u(),
            x_star: default_x_star(),
            degree: 0.0,
            noise_std_sq: default_noise(),
            feature_mean: default_feature_mean(),
            feature_var: default_feature_var(),
        }
    }
}

impl SyntheticConfig {
    /// Default model in dimension m_u with parameter [2, -1, 2, -1, ...].
    pub fn alternating(m_u: usize) -> Self {
        let x_star = (0..m_u).map(|j| if j % 2 == 0 { 2.0 } else { -1.0 }).collect();
        SyntheticConfig { m_u, x_star, ..SyntheticConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_u == 0 {
            return Err(RsError::param("m_u must be positive".to_string()));
        }
        if self.x_star.len() != self.m_u {
            return Err(RsError::shape(format!(
                "x_star has {} entries, expected m_u = {}",
                self.x_star.len(),
                self.m_u
            )));
        }
        if !(self.degree.is_finite() && self.degree >= 0.0) {
            return Err(RsError::param(format!(
                "shift degree must be nonnegative, got {}",
                self.degree
            )));
        }
        if !(self.noise_std_sq.is_finite() && self.noise_std_sq >= 0.0) {
            return Err(RsError::param(format!(
                "noise variance must be nonnegative, got {}",
                self.noise_std_sq
            )));
        }
        if !(self.feature_var.is_finite() && self.feature_var > 0.0) {
            return Err(RsError::param(format!(
                "feature variance must be positive, got {}",
                self.feature_var
            )));
        }
        if !self.feature_mean.is_finite() {
            return Err(RsError::param("feature mean must be finite".to_string()));
        }
        Ok(())
    }

    /// The generating parameter after applying the shift degree:
    /// x_star + degree * [-0.05, 0.025]. Defined for two-dimensional
    /// parameters; any other dimension with a positive degree is rejected.
    pub fn shifted_parameter(&self) -> Result<Vec<f64>> {
        self.validate()?;
        if self.degree == 0.0 {
            return Ok(self.x_star.clone());
        }
        if self.m_u != 2 {
            return Err(RsError::unsupported(format!(
                "shift direction is defined for 2 features, got m_u = {}",
                self.m_u
            )));
        }
        Ok(vec![
            self.x_star[0] - 0.05 * self.degree,
            self.x_star[1] + 0.025 * self.degree,
        ])
    }

    /// Draws n pairs from the model at its configured shift degree.
    pub fn sample_dataset(&self, n: usize, rng: &mut impl Rng) -> Result<Dataset> {
        let x_eff = self.shifted_parameter()?;
        if n == 0 {
            return Err(RsError::param("sample size must be positive".to_string()));
        }
        let feat = Normal::new(self.feature_mean, self.feature_var.sqrt())
            .map_err(|e| RsError::param(format!("feature distribution: {e}")))?;
        let noise = Normal::new(0.0, self.noise_std_sq.sqrt())
            .map_err(|e| RsError::param(format!("noise distribution: {e}")))?;
        let mut features = Vec::with_capacity(n * self.m_u);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let start = features.len();
            for _ in 0..self.m_u {
                features.push(feat.sample(rng));
            }
            let y: f64 = x_eff
                .iter()
                .zip(&features[start..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + noise.sample(rng);
            labels.push(y);
        }
        Ok(Dataset { m_u: self.m_u, features, labels })
    }

    /// A finite-support stand-in for the model: support_size draws from the
    /// model, carrying uniform mass. Useful when downstream computations need
    /// exact transport distances to the generating distribution.
    pub fn discrete_ground_truth(
        &self,
        support_size: usize,
        rng: &mut impl Rng,
    ) -> Result<DiscreteDistribution> {
        if support_size < 2 {
            return Err(RsError::param(format!(
                "discrete ground truth needs at least 2 support points, got {support_size}"
            )));
        }
        let data = self.sample_dataset(support_size, rng)?;
        Ok(DiscreteDistribution::from_dataset(&data))
    }
}

// ============================================================================
// CSV
// ============================================================================

/// Reads a dataset from CSV with header `u1,...,u{m_u},y`.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RsError::validation(format!("cannot read {}: {e}", path.display())))?;
    parse_dataset_csv(&text).map_err(|e| match e {
        RsError::Validation(msg) => RsError::validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses CSV text with header `u1,...,u{m_u},y` into a dataset.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| RsError::validation("empty file".to_string()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 2 || cols[cols.len() - 1] != "y" {
        return Err(RsError::validation(format!(
            "header must be u1,...,u{{m}},y; got '{header}'"
        )));
    }
    let m_u = cols.len() - 1;
    for (j, col) in cols[..m_u].iter().enumerate() {
        let expect = format!("u{}", j + 1);
        if *col != expect {
            return Err(RsError::validation(format!(
                "header column {} is '{col}', expected '{expect}'",
                j + 1
            )));
        }
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != m_u + 1 {
            return Err(RsError::validation(format!(
                "data row {}: expected {} fields, found {}",
                i + 1,
                m_u + 1,
                fields.len()
            )));
        }
        for (j, tok) in fields.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| {
                RsError::validation(format!(
                    "data row {}, column {}: cannot parse '{tok}' as a number",
                    i + 1,
                    j + 1
                ))
            })?;
            if j < m_u {
                features.push(v);
            } else {
                labels.push(v);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(RsError::validation("dataset has no data rows".to_string()));
    }
    Ok(Dataset { m_u, features, labels })
}

/// Serializes a dataset to CSV with header `u1,...,u{m_u},y` and
/// full-precision (shortest round-trip) decimal fields.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    for j in 0..data.dim() {
        let _ = write!(out, "u{},", j + 1);
    }
    out.push_str("y\n");
    for i in 0..data.len() {
        for v in data.row(i) {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", data.label(i));
    }
    out
}

/// Reads a discrete distribution from CSV with header `x1,...,x{d}` or
/// `x1,...,x{d},w`; without a weight column the atoms carry uniform mass.
pub fn read_distribution(path: &Path) -> Result<DiscreteDistribution> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RsError::validation(format!("cannot read {}: {e}", path.display())))?;
    parse_distribution_csv(&text).map_err(|e| match e {
        RsError::Validation(msg) => RsError::validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses CSV text with header `x1,...,x{d}[,w]` into a distribution.
pub fn parse_distribution_csv(text: &str) -> Result<DiscreteDistribution> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| RsError::validation("empty file".to_string()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let weighted = cols.last() == Some(&"w");
    let dim = if weighted { cols.len() - 1 } else { cols.len() };
    if dim == 0 {
        return Err(RsError::validation(format!(
            "header must be x1,...,x{{d}}[,w]; got '{header}'"
        )));
    }
    for (j, col) in cols[..dim].iter().enumerate() {
        let expect = format!("x{}", j + 1);
        if *col != expect {
            return Err(RsError::validation(format!(
                "header column {} is '{col}', expected '{expect}'",
                j + 1
            )));
        }
    }
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(RsError::validation(format!(
                "data row {}: expected {} fields, found {}",
                i + 1,
                cols.len(),
                fields.len()
            )));
        }
        let mut parsed = Vec::with_capacity(fields.len());
        for (j, tok) in fields.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| {
                RsError::validation(format!(
                    "data row {}, column {}: cannot parse '{tok}' as a number",
                    i + 1,
                    j + 1
                ))
            })?;
            parsed.push(v);
        }
        if weighted {
            weights.push(parsed.pop().expect("weight column present"));
        }
        atoms.push(parsed);
    }
    if atoms.is_empty() {
        return Err(RsError::validation("distribution has no atoms".to_string()));
    }
    if !weighted {
        weights = vec![1.0 / atoms.len() as f64; atoms.len()];
        // make the uniform weights sum to exactly one despite rounding
        let total: f64 = weights.iter().sum();
        let n = weights.len();
        weights[n - 1] += 1.0 - total;
    }
    DiscreteDistribution::new(atoms, weights)
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, solve_spd};
    use crate::rng;

    #[test]
    fn empirical_distribution_merges_duplicate_rows() {
        let data = Dataset::from_rows(
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![1.0, 2.0]],
            vec![5.0, 6.0, 5.0],
        )
        .unwrap();
        let p = DiscreteDistribution::from_dataset(&data);
        assert_eq!(p.len(), 2);
        let mut ws = p.weights().to_vec();
        ws.sort_by(f64::total_cmp);
        assert!((ws[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((ws[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.atom(0), &[1.0, 2.0, 5.0]);
    }

    #[test]
    fn distribution_validation_rejects_bad_weights() {
        let atoms = vec![vec![0.0], vec![1.0]];
        assert!(DiscreteDistribution::new(atoms.clone(), vec![0.5, 0.5000000001]).is_err());
        assert!(DiscreteDistribution::new(atoms.clone(), vec![1.5, -0.5]).is_err());
        assert!(DiscreteDistribution::new(atoms, vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn mixture_combines_and_merges_mass() {
        let p = DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let q = DiscreteDistribution::new(vec![vec![1.0], vec![2.0]], vec![0.25, 0.75]).unwrap();
        let m = p.mixture(&q, 0.4).unwrap();
        assert_eq!(m.len(), 3);
        let total: f64 = m.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-15);
        // mass at atom 1.0 comes from both sides: 0.4*0.5 + 0.6*0.25 = 0.35
        let at_one = (0..m.len())
            .find(|&i| m.atom(i) == [1.0])
            .map(|i| m.weight(i))
            .unwrap();
        assert!((at_one - 0.35).abs() < 1e-15);
    }

    #[test]
    fn shifted_parameter_matches_shift_rule() {
        let cfg = SyntheticConfig { degree: 4.0, ..SyntheticConfig::default() };
        let x = cfg.shifted_parameter().unwrap();
        assert!((x[0] - 1.80).abs() < 1e-15);
        assert!((x[1] + 0.90).abs() < 1e-15);

        let no_shift = SyntheticConfig::default().shifted_parameter().unwrap();
        assert_eq!(no_shift, vec![2.0, -1.0]);
    }

    #[test]
    fn shift_in_other_dimensions_is_rejected() {
        let cfg = SyntheticConfig { degree: 1.0, ..SyntheticConfig::alternating(3) };
        assert!(matches!(cfg.shifted_parameter(), Err(RsError::Unsupported(_))));
        // degree 0 carries no shift and is fine in any dimension
        let cfg0 = SyntheticConfig::alternating(3);
        assert!(cfg0.shifted_parameter().is_ok());
    }

    #[test]
    fn synthetic_config_validation() {
        let bad_dim = SyntheticConfig { m_u: 3, ..SyntheticConfig::default() };
        assert!(bad_dim.validate().is_err());
        let bad_degree = SyntheticConfig { degree: -1.0, ..SyntheticConfig::default() };
        assert!(bad_degree.validate().is_err());
        let bad_var = SyntheticConfig { feature_var: 0.0, ..SyntheticConfig::default() };
        assert!(bad_var.validate().is_err());
        assert!(SyntheticConfig::default().validate().is_ok());
    }

    #[test]
    fn ols_recovers_generating_parameter_on_large_sample() {
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(7, rng::Purpose::Train, 0);
        let data = cfg.sample_dataset(100_000, &mut r).unwrap();
        // normal equations: (U'U) x = U'y
        let m = data.dim();
        let mut h = vec![0.0; m * m];
        let mut b = vec![0.0; m];
        for i in 0..data.len() {
            let u = data.row(i);
            for p in 0..m {
                for q in 0..m {
                    h[p * m + q] += u[p] * u[q];
                }
                b[p] += u[p] * data.label(i);
            }
        }
        let mut x = vec![0.0; m];
        assert!(solve_spd(&mut h, m, &b, &mut x));
        assert!((x[0] - 2.0).abs() < 0.02, "x0 = {}", x[0]);
        assert!((x[1] + 1.0).abs() < 0.02, "x1 = {}", x[1]);
    }

    #[test]
    fn feature_moments_match_model() {
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(9, rng::Purpose::Train, 1);
        let data = cfg.sample_dataset(200_000, &mut r).unwrap();
        let n = data.len() as f64;
        let mean: f64 = (0..data.len()).map(|i| data.row(i)[0]).sum::<f64>() / n;
        let var: f64 =
            (0..data.len()).map(|i| (data.row(i)[0] - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        assert!((var - 0.5).abs() < 0.01, "var {var}");
    }

    #[test]
    fn label_noise_variance_matches_model() {
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(9, rng::Purpose::Train, 2);
        let data = cfg.sample_dataset(200_000, &mut r).unwrap();
        let n = data.len() as f64;
        let resid_var: f64 = (0..data.len())
            .map(|i| (data.label(i) - dot(&cfg.x_star, data.row(i))).powi(2))
            .sum::<f64>()
            / n;
        assert!((resid_var - 0.1).abs() < 0.005, "residual variance {resid_var}");
    }

    #[test]
    fn discrete_ground_truth_has_uniform_weights() {
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(11, rng::Purpose::GroundTruth, 0);
        let p = cfg.discrete_ground_truth(20, &mut r).unwrap();
        assert_eq!(p.len(), 20);
        assert_eq!(p.dim(), 3);
        for i in 0..p.len() {
            assert!((p.weight(i) - 0.05).abs() < 1e-15);
        }
        assert!(cfg.discrete_ground_truth(1, &mut r).is_err());
    }

    #[test]
    fn sampling_from_discrete_support_stays_in_support() {
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(13, rng::Purpose::GroundTruth, 0);
        let p = cfg.discrete_ground_truth(5, &mut r).unwrap();
        let data = p.sample_dataset(200, &mut r).unwrap();
        assert_eq!(data.len(), 200);
        for i in 0..data.len() {
            let joint = data.joint(i);
            assert!(
                (0..p.len()).any(|j| p.atom(j) == joint.as_slice()),
                "draw {i} not on the support"
            );
        }
    }

    #[test]
    fn dataset_csv_round_trips_bit_for_bit() {
        let cfg = SyntheticConfig::default();
        let mut r = rng::substream(15, rng::Purpose::Train, 0);
        let data = cfg.sample_dataset(50, &mut r).unwrap();
        let text = dataset_to_csv(&data);
        assert!(text.starts_with("u1,u2,y\n"));
        assert!(text.ends_with('\n'));
        let back = parse_dataset_csv(&text).unwrap();
        assert_eq!(back, data);
        // serializing again is byte-identical
        assert_eq!(dataset_to_csv(&back), text);
    }

    #[test]
    fn dataset_csv_errors_name_the_offending_row() {
        let bad_header = "a,b,y\n1,2,3\n";
        assert!(parse_dataset_csv(bad_header).is_err());

        let bad_count = "u1,u2,y\n1,2,3\n4,5\n";
        let err = parse_dataset_csv(bad_count).unwrap_err().to_string();
        assert!(err.contains("row 2"), "message was: {err}");

        let bad_field = "u1,u2,y\n1,2,3\n4,x,6\n";
        let err = parse_dataset_csv(bad_field).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("'x'"), "message was: {err}");

        assert!(parse_dataset_csv("u1,u2,y\n").is_err());
    }

    #[test]
    fn distribution_csv_supports_optional_weights() {
        let uniform = parse_distribution_csv("x1,x2\n0,0\n1,1\n").unwrap();
        assert_eq!(uniform.len(), 2);
        assert!((uniform.weight(0) - 0.5).abs() < 1e-15);

        let weighted = parse_distribution_csv("x1,w\n0,0.25\n1,0.75\n").unwrap();
        assert!((weighted.weight(1) - 0.75).abs() < 1e-15);

        let bad = parse_distribution_csv("x1,w\n0,0.5\n1,0.6\n");
        assert!(bad.is_err());
    }

    #[test]
    fn uniform_distribution_weights_sum_to_exactly_one() {
        // 1/3 rounds, so the parser fixes the last weight to close the sum
        let p = parse_distribution_csv("x1\n0\n1\n2\n").unwrap();
        let total: f64 = p.weights().iter().sum();
        assert_eq!(total, 1.0);
    }
}
