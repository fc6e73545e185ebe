//! Closed-form Dirichlet-multinomial scores of the sABS hypothesis, plus
//! empirical conditional entropies.
//!
//! Configurations `j` of `(X, Z_1, .., Z_k)` are indexed mixed-radix with X
//! least significant, then `Z_1`, and so on; `k` indexes the value of Y.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::data::{Dataset, VarType};
use crate::error::{input, Error, Result};
use crate::score::ScoreResult;

/// Largest number of `(X, Z)` configurations a table may have.
pub const MAX_CONFIGS: usize = 1 << 24;

/// Interior cut points per continuous variable. A value `v` falls into bin
/// `#{c : c <= v}`, so `m` cut points give `m + 1` bins.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub cuts: BTreeMap<String, Vec<f64>>,
}

impl Binning {
    /// Equal-frequency cut points for every continuous variable among
    /// `vars`, computed on `d` alone. Ties are merged, so a variable may get
    /// fewer than `bins` bins.
    pub fn quantiles(d: &Dataset, vars: &[&str], bins: usize) -> Result<Binning> {
        if bins < 2 {
            return Err(input("need at least two bins"));
        }
        let mut cuts = BTreeMap::new();
        for &v in vars {
            if d.var_type(v)?.is_discrete() {
                continue;
            }
            if d.is_empty() {
                return Err(input(format!(
                    "cannot place bins for `{v}` on an empty dataset"
                )));
            }
            let mut xs = d.column(v)?.to_vec();
            xs.sort_by(f64::total_cmp);
            let mut c: Vec<f64> = (1..bins)
                .map(|i| {
                    let pos = i as f64 / bins as f64 * (xs.len() - 1) as f64;
                    let lo = pos.floor() as usize;
                    let hi = pos.ceil() as usize;
                    xs[lo] + (pos - lo as f64) * (xs[hi] - xs[lo])
                })
                .collect();
            c.dedup();
            // a cut at the minimum would leave the first bin empty
            c.retain(|&x| x > xs[0]);
            cuts.insert(v.to_string(), c);
        }
        Ok(Binning { cuts })
    }

    pub fn card(&self, var: &str) -> Option<u32> {
        self.cuts.get(var).map(|c| c.len() as u32 + 1)
    }

    pub fn bin(&self, var: &str, v: f64) -> Option<u32> {
        self.cuts
            .get(var)
            .map(|c| c.partition_point(|&cut| cut <= v) as u32)
    }
}

/// Counts of Y by configuration for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub q: usize,
    pub r: usize,
    /// Row-major `q × r`.
    pub counts: Vec<u64>,
}

impl CountTable {
    pub fn zeros(q: usize, r: usize) -> Self {
        CountTable {
            q,
            r,
            counts: vec![0; q * r],
        }
    }

    pub fn get(&self, j: usize, k: usize) -> u64 {
        self.counts[j * self.r + k]
    }

    pub fn row(&self, j: usize) -> &[u64] {
        &self.counts[j * self.r..(j + 1) * self.r]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn level_of(d: &Dataset, var: &str, bins: Option<&Binning>) -> Result<(u32, Vec<u32>)> {
    let col = d.column(var)?;
    match d.var_type(var)? {
        VarType::Discrete { card } => Ok((card, col.iter().map(|&v| v as u32).collect())),
        VarType::Continuous => {
            let b = bins.filter(|b| b.cuts.contains_key(var)).ok_or_else(|| {
                input(format!(
                    "`{var}` is continuous; the discrete score needs bin edges for it"
                ))
            })?;
            let card = b.card(var).unwrap();
            Ok((card, col.iter().map(|&v| b.bin(var, v).unwrap()).collect()))
        }
    }
}

/// Configuration index of `(X, Z)` for every row of `d`, and the number of
/// configurations.
pub fn config_index(
    d: &Dataset,
    x: &str,
    z: &[&str],
    bins: Option<&Binning>,
) -> Result<(usize, Vec<usize>)> {
    let mut idx = vec![0usize; d.n()];
    let mut stride = 1usize;
    for var in std::iter::once(&x).chain(z) {
        let (card, levels) = level_of(d, var, bins)?;
        for (i, l) in levels.into_iter().enumerate() {
            idx[i] += l as usize * stride;
        }
        stride = stride
            .checked_mul(card as usize)
            .filter(|&s| s <= MAX_CONFIGS)
            .ok_or(Error::Size {
                what: "configuration count",
                got: usize::MAX,
                limit: MAX_CONFIGS,
            })?;
    }
    Ok((stride, idx))
}

/// Tabulates Y against the joint configurations of `(X, Z)` in `d`.
pub fn tabulate(
    d: &Dataset,
    y: &str,
    x: &str,
    z: &[&str],
    bins: Option<&Binning>,
) -> Result<CountTable> {
    if x == y || z.contains(&y) {
        return Err(input(format!(
            "`{y}` is both outcome and conditioning variable"
        )));
    }
    let (r, ys) = level_of(d, y, bins)?;
    let (q, idx) = config_index(d, x, z, bins)?;
    let mut t = CountTable::zeros(q, r as usize);
    for (j, k) in idx.into_iter().zip(ys) {
        t.counts[j * t.r + k as usize] += 1;
    }
    Ok(t)
}

/// Observational and experimental counts over the same configurations,
/// with the Dirichlet hyperparameters `α_jk`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyCounts {
    pub obs: CountTable,
    pub exp: CountTable,
    pub alpha: Vec<f64>,
}

impl ContingencyCounts {
    /// Uses `α_jk = 1` throughout.
    pub fn new(obs: CountTable, exp: CountTable) -> Result<Self> {
        let alpha = vec![1.0; obs.q * obs.r];
        Self::with_alpha(obs, exp, alpha)
    }

    pub fn with_alpha(obs: CountTable, exp: CountTable, alpha: Vec<f64>) -> Result<Self> {
        if obs.q != exp.q || obs.r != exp.r {
            return Err(input(
                "observational and experimental tables differ in shape",
            ));
        }
        if obs.counts.len() != obs.q * obs.r || exp.counts.len() != exp.q * exp.r {
            return Err(input("count vector does not match q × r"));
        }
        if alpha.len() != obs.q * obs.r || alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(input("alpha must be q × r positive finite values"));
        }
        Ok(ContingencyCounts { obs, exp, alpha })
    }

    /// Tabulates both datasets. Continuous variables are binned with `bins`,
    /// which callers compute on the observational data only.
    pub fn from_data(
        de: &Dataset,
        do_: &Dataset,
        y: &str,
        x: &str,
        z: &[&str],
        bins: Option<&Binning>,
    ) -> Result<Self> {
        de.check_same_schema(do_)?;
        let obs = tabulate(do_, y, x, z, bins)?;
        let exp = tabulate(de, y, x, z, bins)?;
        Self::new(obs, exp)
    }

    pub fn q(&self) -> usize {
        self.obs.q
    }

    pub fn r(&self) -> usize {
        self.obs.r
    }

    fn alpha_row(&self, j: usize) -> &[f64] {
        &self.alpha[j * self.r()..(j + 1) * self.r()]
    }

    /// Same counts with the observational table zeroed.
    pub fn without_obs(&self) -> Self {
        ContingencyCounts {
            obs: CountTable::zeros(self.q(), self.r()),
            ..self.clone()
        }
    }
}

fn log_ml(c: &ContingencyCounts, use_obs: bool) -> f64 {
    let mut total = 0.0;
    for j in 0..c.q() {
        let e = c.exp.row(j);
        let n_e: u64 = e.iter().sum();
        if n_e == 0 {
            continue;
        }
        let a = c.alpha_row(j);
        let o = c.obs.row(j);
        let obs = |k: usize| if use_obs { o[k] as f64 } else { 0.0 };
        let a_j: f64 = a.iter().sum();
        let n_o: f64 = (0..c.r()).map(obs).sum();
        total += ln_gamma(a_j + n_o) - ln_gamma(a_j + n_o + n_e as f64);
        for k in 0..c.r() {
            if e[k] > 0 {
                total += ln_gamma(a[k] + obs(k) + e[k] as f64) - ln_gamma(a[k] + obs(k));
            }
        }
    }
    total
}

/// log P(D_e | D_o*, h_Z): the experimental counts scored under the
/// Dirichlet posterior left by the observational counts.
pub fn log_ml_h(c: &ContingencyCounts) -> f64 {
    log_ml(c, true)
}

/// log P(D_e | D_o*, ¬h_Z): the experimental counts under the prior alone.
pub fn log_ml_not_h(c: &ContingencyCounts) -> f64 {
    log_ml(c, false)
}

pub fn posterior_sabs(c: &ContingencyCounts, prior: f64) -> Result<ScoreResult> {
    let mut s = ScoreResult::new(Vec::new(), log_ml_h(c), log_ml_not_h(c), prior)?;
    s.q = Some(c.q());
    s.r = Some(c.r());
    Ok(s)
}

/// Which counts an entropy is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountSource {
    Obs,
    Exp,
    Pooled,
}

/// Empirical `H(Y | X, Z)` in nats, with `0 log 0 = 0`.
pub fn conditional_entropy(c: &ContingencyCounts, source: CountSource) -> Result<f64> {
    let cell = |j: usize, k: usize| match source {
        CountSource::Obs => c.obs.get(j, k),
        CountSource::Exp => c.exp.get(j, k),
        CountSource::Pooled => c.obs.get(j, k) + c.exp.get(j, k),
    } as f64;
    let mut n = 0.0;
    let mut h = 0.0;
    for j in 0..c.q() {
        let n_j: f64 = (0..c.r()).map(|k| cell(j, k)).sum();
        n += n_j;
        for k in 0..c.r() {
            let n_jk = cell(j, k);
            if n_jk > 0.0 {
                h -= n_jk * (n_jk / n_j).ln();
            }
        }
    }
    if n == 0.0 {
        return Err(Error::Undefined(
            "conditional entropy of an empty table".into(),
        ));
    }
    Ok(h / n)
}
