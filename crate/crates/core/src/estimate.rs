//! Conditional-effect estimators, their held-out cross-entropy, and the
//! simulation harness comparing them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::data::Dataset;
use crate::discrete::{config_index, tabulate, Binning, CountTable};
use crate::error::{input, Error, Result};
use crate::mcmc::{sample_posterior, McmcConfig, PosteriorSample, PriorSpec};

mod experiment;

pub use experiment::{
    prior_ablation, run_experiment, set_label, write_ablation_csv, AblationConfig, AblationRow,
    AucRow, CeRow, ExperimentConfig, ExperimentReport, Failure, ScorerChoice, SearchRow, FINDSABS,
};

/// Predictions are clamped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-12;

/// Which data an estimator is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "De")]
    Experimental,
    #[serde(rename = "Do*")]
    Observational,
    #[serde(rename = "De+Do*")]
    Pooled,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Experimental => "De",
            Source::Observational => "Do*",
            Source::Pooled => "De+Do*",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// Posterior mean of a Dirichlet-multinomial per configuration of (X, Z).
    DirichletMultinomial,
    /// Posterior predictive of the Cauchy-prior logistic model.
    BayesianLogistic,
}

#[derive(Debug, Clone)]
enum Fitted {
    Dirichlet {
        table: CountTable,
        alpha: f64,
        bins: Option<Binning>,
    },
    Logistic(Arc<PosteriorSample>),
}

/// `P̂(Y | X, Z)` fitted on one of the data sources.
#[derive(Debug, Clone)]
pub struct EffectEstimator {
    pub y: String,
    pub x: String,
    pub z: Vec<String>,
    pub source: Source,
    pub model: Model,
    fitted: Fitted,
}

/// Model settings for [`fit_estimator`].
#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Bins for continuous variables (Dirichlet model).
    pub bins: Option<Binning>,
    pub prior: PriorSpec,
    pub mcmc: McmcConfig,
}

/// Fits `P̂(Y | X, Z)` on `de`, `do_` or both stacked (observational rows first).
#[allow(clippy::too_many_arguments)]
pub fn fit_estimator(
    de: &Dataset,
    do_: &Dataset,
    y: &str,
    x: &str,
    z: &[&str],
    source: Source,
    model: Model,
    opts: &FitOptions,
) -> Result<EffectEstimator> {
    de.check_same_schema(do_)?;
    let pooled;
    let data = match source {
        Source::Experimental => de,
        Source::Observational => do_,
        Source::Pooled => {
            pooled = do_.concat(de)?;
            &pooled
        }
    };
    if data.is_empty() {
        return Err(Error::Fit(format!(
            "no {} records to fit on",
            source.as_str()
        )));
    }
    let fitted = match model {
        Model::DirichletMultinomial => Fitted::Dirichlet {
            table: tabulate(data, y, x, z, opts.bins.as_ref())?,
            alpha: 1.0,
            bins: opts.bins.clone(),
        },
        Model::BayesianLogistic => Fitted::Logistic(Arc::new(sample_posterior(
            data,
            y,
            x,
            z,
            &opts.prior,
            &opts.mcmc,
        )?)),
    };
    Ok(EffectEstimator {
        y: y.to_string(),
        x: x.to_string(),
        z: z.iter().map(|s| s.to_string()).collect(),
        source,
        model,
        fitted,
    })
}

impl EffectEstimator {
    fn z_refs(&self) -> Vec<&str> {
        self.z.iter().map(String::as_str).collect()
    }

    /// Predictive distribution of Y for every row of `d` (each sums to 1).
    pub fn predict(&self, d: &Dataset) -> Result<Vec<Vec<f64>>> {
        match &self.fitted {
            Fitted::Dirichlet { table, alpha, bins } => {
                let (q, idx) = config_index(d, &self.x, &self.z_refs(), bins.as_ref())?;
                if q != table.q {
                    return Err(input("cardinalities differ from the fitted table"));
                }
                let r = table.r as f64;
                Ok(idx
                    .into_iter()
                    .map(|j| {
                        let row = table.row(j);
                        let n: f64 = row.iter().sum::<u64>() as f64;
                        row.iter()
                            .map(|&c| (alpha + c as f64) / (alpha * r + n))
                            .collect()
                    })
                    .collect())
            }
            Fitted::Logistic(post) => Ok(post
                .predict(d)?
                .into_iter()
                .map(|p| vec![1.0 - p, p])
                .collect()),
        }
    }

    /// `P̂(Y = y_i | x_i, z_i)` for the observed outcome of every row.
    pub fn prob_of_observed(&self, d: &Dataset) -> Result<Vec<f64>> {
        let ys = d.column(&self.y)?;
        let pred = self.predict(d)?;
        ys.iter()
            .zip(pred)
            .map(|(&y, p)| {
                p.get(y as usize)
                    .copied()
                    .ok_or_else(|| input(format!("outcome value {y} outside the fitted support")))
            })
            .collect()
    }
}

/// `-(1/n) Σ log P̂(Y_i | X_i, Z_i)` on held-out experimental data.
pub fn cross_entropy(est: &EffectEstimator, test: &Dataset) -> Result<f64> {
    if !test.regime().is_experimental() {
        return Err(input("test data must come from the experimental regime"));
    }
    if test.is_empty() {
        return Err(Error::Undefined(
            "cross-entropy of an empty test set".into(),
        ));
    }
    let p = est.prob_of_observed(test)?;
    Ok(-p.iter().map(|v| v.clamp(EPS, 1.0 - EPS).ln()).sum::<f64>() / p.len() as f64)
}

/// Mann–Whitney AUC of `scores` against binary `labels`, ties counted half.
pub fn auc_sabs(batch: &[(f64, bool)]) -> Result<f64> {
    let n_pos = batch.iter().filter(|(_, l)| *l).count();
    let n_neg = batch.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Undefined(
            "AUC needs both positive and negative labels".into(),
        ));
    }
    if batch.iter().any(|(s, _)| s.is_nan()) {
        return Err(input("NaN score in AUC batch"));
    }
    let mut order: Vec<usize> = (0..batch.len()).collect();
    order.sort_by(|&a, &b| batch[a].0.total_cmp(&batch[b].0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && batch[order[j + 1]].0 == batch[order[i]].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if batch[k].1 {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    /// Pairs with `a > b`.
    pub greater: usize,
    pub less: usize,
    pub ties: usize,
    /// Exact two-sided binomial p-value over the untied pairs.
    pub p_value: f64,
}

/// Paired sign test of `a` against `b`; NaN pairs are skipped.
pub fn sign_test(a: &[f64], b: &[f64]) -> Result<SignTest> {
    if a.len() != b.len() {
        return Err(input("sign test needs paired samples"));
    }
    let (mut greater, mut less, mut ties) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        if x.is_nan() || y.is_nan() {
            continue;
        }
        match x.partial_cmp(y).unwrap() {
            std::cmp::Ordering::Greater => greater += 1,
            std::cmp::Ordering::Less => less += 1,
            std::cmp::Ordering::Equal => ties += 1,
        }
    }
    let n = (greater + less) as u64;
    let p_value = if n == 0 {
        1.0
    } else {
        let k = greater.min(less) as u64;
        let bin = Binomial::new(0.5, n).expect("valid binomial");
        (2.0 * bin.cdf(k)).min(1.0)
    };
    Ok(SignTest {
        greater,
        less,
        ties,
        p_value,
    })
}

/// Median of the non-NaN values; NaN if there are none.
pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        (s[m - 1] + s[m]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Domain, Regime, VarType};

    fn binary(name_vals: &[(&str, Vec<f64>)], regime: Regime) -> Dataset {
        Dataset::new(
            name_vals.iter().map(|(n, _)| n.to_string()).collect(),
            vec![VarType::binary(); name_vals.len()],
            name_vals.iter().map(|(_, v)| v.clone()).collect(),
            Domain::Target,
            regime,
        )
        .unwrap()
    }

    fn exp() -> Regime {
        Regime::Experimental {
            treatment: "X".into(),
        }
    }

    #[test]
    fn dirichlet_posterior_mean() {
        // z = ∅, X constant: one configuration with Y=1 six times, Y=0 twice
        let d = binary(
            &[
                ("X", vec![0.0; 8]),
                ("Y", vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]),
            ],
            Regime::Observational,
        );
        let e = d.take_rows(&[]).unwrap();
        let est = fit_estimator(
            &e,
            &d,
            "Y",
            "X",
            &[],
            Source::Pooled,
            Model::DirichletMultinomial,
            &FitOptions::default(),
        )
        .unwrap();
        let p = est.predict(&d.take_rows(&[0]).unwrap()).unwrap();
        assert!((p[0][1] - 0.7).abs() < 1e-15);
        assert!((p[0].iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_edge_cases() {
        let d = binary(
            &[
                ("X", vec![0.0, 1.0, 0.0, 1.0]),
                ("Y", vec![0.0, 1.0, 0.0, 1.0]),
            ],
            exp(),
        );
        // perfect predictor: Y = X, trained on many copies -> near-zero CE
        let rows: Vec<usize> = (0..4000).map(|i| i % 4).collect();
        let train = d.take_rows(&rows).unwrap();
        let est = fit_estimator(
            &train,
            &train,
            "Y",
            "X",
            &[],
            Source::Experimental,
            Model::DirichletMultinomial,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(cross_entropy(&est, &d).unwrap() < 1e-3);
        // no data in any cell -> uniform predictions -> log 2
        let tiny = binary(&[("X", vec![0.0]), ("Y", vec![0.0])], exp());
        let other = binary(&[("X", vec![0.0, 0.0]), ("Y", vec![1.0, 0.0])], exp());
        let est = fit_estimator(
            &other,
            &tiny,
            "Y",
            "X",
            &[],
            Source::Experimental,
            Model::DirichletMultinomial,
            &FitOptions::default(),
        )
        .unwrap();
        assert!((cross_entropy(&est, &d).unwrap() - 2f64.ln()).abs() < 1e-12);
        let obs = binary(&[("X", vec![0.0]), ("Y", vec![0.0])], Regime::Observational);
        assert!(cross_entropy(&est, &obs).is_err());
    }

    #[test]
    fn empty_source_is_a_fit_error() {
        let d = binary(&[("X", vec![0.0]), ("Y", vec![0.0])], exp());
        let e = d.take_rows(&[]).unwrap();
        let r = fit_estimator(
            &e,
            &d,
            "Y",
            "X",
            &[],
            Source::Experimental,
            Model::DirichletMultinomial,
            &FitOptions::default(),
        );
        assert!(matches!(r, Err(Error::Fit(_))));
    }

    #[test]
    fn auc_basics() {
        assert_eq!(
            auc_sabs(&[(0.9, true), (0.8, true), (0.1, false)]).unwrap(),
            1.0
        );
        assert_eq!(auc_sabs(&[(0.5, true), (0.5, false)]).unwrap(), 0.5);
        assert_eq!(auc_sabs(&[(0.1, true), (0.9, false)]).unwrap(), 0.0);
        assert!(matches!(auc_sabs(&[(0.3, true)]), Err(Error::Undefined(_))));
    }

    #[test]
    fn sign_test_exact_values() {
        // 10 of 10 positive: p = 2 / 1024
        let a = vec![1.0; 10];
        let b = vec![0.0; 10];
        let t = sign_test(&a, &b).unwrap();
        assert_eq!((t.greater, t.less), (10, 0));
        assert!((t.p_value - 2.0 / 1024.0).abs() < 1e-12);
        let t = sign_test(&[1.0, 0.0, 2.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((t.greater, t.less, t.ties), (1, 1, 1));
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn median_skips_nan() {
        assert_eq!(median(&[3.0, f64::NAN, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0]), 2.5);
        assert!(median(&[f64::NAN]).is_nan());
    }
}
