//! Comparison statistics over methods and datasets: averaged errors,
//! Wilcoxon signed-rank, Friedman, average ranks and Nemenyi critical
//! differences.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Generalization errors indexed by method, dataset and repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    methods: Vec<String>,
    datasets: Vec<String>,
    /// `errors[method][dataset]` maps repetition to error.
    errors: Vec<Vec<BTreeMap<u64, f64>>>,
}

/// One line of a results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub dataset: String,
    pub repetition: u64,
    pub error: f64,
}

impl ResultTable {
    /// Methods and datasets keep their order of first appearance.
    pub fn from_rows(rows: &[ResultRow]) -> Result<Self> {
        let mut methods: Vec<String> = Vec::new();
        let mut datasets: Vec<String> = Vec::new();
        for r in rows {
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
            if !datasets.contains(&r.dataset) {
                datasets.push(r.dataset.clone());
            }
        }
        let mut errors = vec![vec![BTreeMap::new(); datasets.len()]; methods.len()];
        for r in rows {
            if !(0.0..=1.0).contains(&r.error) {
                return Err(Error::Data(format!(
                    "error {} for {}/{} is outside [0, 1]",
                    r.error, r.method, r.dataset
                )));
            }
            let m = methods.iter().position(|x| *x == r.method).unwrap();
            let d = datasets.iter().position(|x| *x == r.dataset).unwrap();
            if errors[m][d].insert(r.repetition, r.error).is_some() {
                return Err(Error::Data(format!(
                    "duplicate cell {}/{}/{}",
                    r.method, r.dataset, r.repetition
                )));
            }
        }
        for (m, row) in errors.iter().enumerate() {
            for (d, cell) in row.iter().enumerate() {
                if cell.is_empty() {
                    return Err(Error::Data(format!(
                        "missing cell for method {} on dataset {}",
                        methods[m], datasets[d]
                    )));
                }
            }
        }
        Ok(Self {
            methods,
            datasets,
            errors,
        })
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let rows: Vec<ResultRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        Self::from_rows(&rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn cell(&self, method: usize, dataset: usize) -> &BTreeMap<u64, f64> {
        &self.errors[method][dataset]
    }

    /// Largest repetition count over all cells.
    pub fn repetitions(&self) -> usize {
        self.errors
            .iter()
            .flatten()
            .map(BTreeMap::len)
            .max()
            .unwrap_or(0)
    }
}

/// Mean over repetitions: `result[method][dataset]`.
pub fn average_errors(table: &ResultTable) -> Vec<Vec<f64>> {
    table
        .errors
        .iter()
        .map(|row| {
            row.iter()
                .map(|cell| cell.values().sum::<f64>() / cell.len() as f64)
                .collect()
        })
        .collect()
}

/// Ascending ranks starting at 1; ties share their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Rank methods within each dataset (lowest error gets rank 1), then
/// average over datasets. `means[method][dataset]`.
pub fn average_ranks(means: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = means.len();
    let n = check_matrix(means)?;
    let mut total = vec![0.0; k];
    for d in 0..n {
        let col: Vec<f64> = means.iter().map(|m| m[d]).collect();
        for (t, r) in total.iter_mut().zip(midranks(&col)) {
            *t += r;
        }
    }
    Ok(total.into_iter().map(|t| t / n as f64).collect())
}

/// Ranks computed within every (dataset, repetition) and then averaged.
/// Only repetitions present for every method on a dataset are used.
pub fn average_ranks_per_repetition(table: &ResultTable) -> Result<Vec<f64>> {
    let k = table.methods.len();
    let mut total = vec![0.0; k];
    let mut count = 0usize;
    for d in 0..table.datasets.len() {
        let reps = table.errors[0][d]
            .keys()
            .filter(|r| table.errors.iter().all(|m| m[d].contains_key(r)));
        for r in reps {
            let col: Vec<f64> = table.errors.iter().map(|m| m[d][r]).collect();
            for (t, rank) in total.iter_mut().zip(midranks(&col)) {
                *t += rank;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Data("no repetition is shared by all methods".into()));
    }
    Ok(total.into_iter().map(|t| t / count as f64).collect())
}

fn check_matrix(means: &[Vec<f64>]) -> Result<usize> {
    let n = means.first().map(Vec::len).unwrap_or(0);
    if means.iter().any(|m| m.len() != n) {
        return Err(Error::InvalidArgument(
            "ragged method-by-dataset matrix".into(),
        ));
    }
    Ok(n)
}

/// How to compute a Wilcoxon p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilcoxonMethod {
    /// Exact for at most [`EXACT_LIMIT`] non-zero differences, normal
    /// approximation otherwise.
    #[default]
    Auto,
    Exact,
    Normal,
}

impl std::str::FromStr for WilcoxonMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "exact" => Ok(Self::Exact),
            "normal" => Ok(Self::Normal),
            other => Err(Error::InvalidArgument(format!(
                "unknown Wilcoxon method `{other}`"
            ))),
        }
    }
}

pub const EXACT_LIMIT: usize = 14;

/// Relative tolerance under which two paired differences count as equal.
const TIE_TOLERANCE: f64 = 1e-9;

/// Like [`midranks`], but values within `tol` of the smallest member of a
/// run share its rank.
fn midranks_within(values: &[f64], tol: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] - values[order[i]] <= tol {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    /// Number of non-zero differences.
    pub n_used: usize,
    pub exact: bool,
    /// All differences were zero.
    pub degenerate: bool,
}

/// Two-sided Wilcoxon signed-rank test of `a` against `b`.
pub fn wilcoxon_signed_rank(
    a: &[f64],
    b: &[f64],
    method: WilcoxonMethod,
) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 3 {
        return Err(Error::InvalidArgument(
            "Wilcoxon test needs at least 3 pairs".into(),
        ));
    }
    // Differences of values given to finite precision carry rounding noise
    // (0.0255 - 0.0273 vs 0.0236 - 0.0234 ...), so near-equal magnitudes are
    // treated as ties and near-zero ones as zero.
    let magnitude = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = TIE_TOLERANCE * magnitude;
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| d.abs() > tol)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            p_value: 1.0,
            w_plus: 0.0,
            n_used: 0,
            exact: true,
            degenerate: true,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks_within(&abs, tol);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let exact = match method {
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
        WilcoxonMethod::Auto => n <= EXACT_LIMIT,
    };
    let p_value = if exact {
        exact_p(&ranks, w_plus)
    } else {
        normal_p(&ranks, w_plus)
    };
    Ok(WilcoxonResult {
        p_value,
        w_plus,
        n_used: n,
        exact,
        degenerate: false,
    })
}

/// Null distribution of W+ by dynamic programming over doubled ranks
/// (midranks are multiples of 1/2).
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        tie += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p_value: f64,
    pub average_ranks: Vec<f64>,
}

/// Friedman chi-square test on `means[method][dataset]`.
pub fn friedman(means: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = check_matrix(means)?;
    let ranks = average_ranks(means)?;
    let (statistic, p_value) = friedman_from_average_ranks(&ranks, n)?;
    Ok(FriedmanResult {
        statistic,
        p_value,
        average_ranks: ranks,
    })
}

/// Friedman statistic and p-value from already averaged ranks over `n`
/// datasets.
pub fn friedman_from_average_ranks(ranks: &[f64], n: usize) -> Result<(f64, f64)> {
    let k = ranks.len();
    if k < 3 || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Friedman test needs k >= 3 methods and N >= 2 datasets, got k={k}, N={n}"
        )));
    }
    let (kf, nf) = (k as f64, n as f64);
    let sum_sq: f64 = ranks.iter().map(|r| r * r).sum();
    let stat = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok((stat, chi.sf(stat)))
}

/// Critical values `q_alpha(k)` for k = 2..=10 (two-tailed Nemenyi).
const Q_05: [f64; 9] = [
    1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164,
];
const Q_10: [f64; 9] = [
    1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920,
];

/// Nemenyi critical difference for `k` methods over `n` datasets.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if !(2..=10).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "Nemenyi table covers k in 2..=10, got {k}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(
            "Nemenyi test needs at least 2 datasets".into(),
        ));
    }
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_05
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_10
    } else {
        return Err(Error::InvalidArgument(format!(
            "alpha must be 0.05 or 0.10, got {alpha}"
        )));
    };
    let (kf, nf) = (k as f64, n as f64);
    Ok(table[k - 2] * (kf * (kf + 1.0) / (6.0 * nf)).sqrt())
}

/// Maximal runs of methods (sorted by rank) whose rank spread does not
/// exceed `cd`; each group has at least two members. Returns method
/// indices, best rank first.
pub fn nemenyi_groups(ranks: &[f64], cd: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by(|&a, &b| ranks[a].total_cmp(&ranks[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last_end = 0;
    for i in 0..order.len() {
        let mut j = i;
        while j + 1 < order.len() && ranks[order[j + 1]] - ranks[order[i]] <= cd {
            j += 1;
        }
        if j > i && j + 1 > last_end {
            groups.push(order[i..=j].to_vec());
            last_end = j + 1;
        }
    }
    groups
}

/// Whether two average ranks differ by more than the critical difference.
pub fn significantly_different(rank_a: f64, rank_b: f64, cd: f64) -> bool {
    (rank_a - rank_b).abs() > cd
}

/// Pairwise Wilcoxon p-values with orientation by average rank.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseReport {
    pub methods: Vec<String>,
    /// `None` on the diagonal.
    pub p_values: Vec<Vec<Option<f64>>>,
    /// `worse[i][j]`: method `i` has a higher (worse) average rank than `j`.
    pub worse: Vec<Vec<bool>>,
    pub average_ranks: Vec<f64>,
}

impl PairwiseReport {
    /// Cell text: bold (`**p**`) when `p <= alpha`, parenthesized when the
    /// row method is worse, `-` on the diagonal.
    pub fn cell(&self, i: usize, j: usize, alpha: f64) -> String {
        match self.p_values[i][j] {
            None => "-".to_string(),
            Some(p) => {
                let mut s = format_p(p);
                if p <= alpha {
                    s = format!("**{s}**");
                }
                if self.worse[i][j] {
                    s = format!("({s})");
                }
                s
            }
        }
    }
}

pub fn format_p(p: f64) -> String {
    if p >= 1e-3 {
        format!("{p:.4}")
    } else {
        format!("{p:.2e}")
    }
}

/// Wilcoxon test for every pair of methods on `means[method][dataset]`.
pub fn pairwise_report(
    methods: &[String],
    means: &[Vec<f64>],
    method: WilcoxonMethod,
) -> Result<PairwiseReport> {
    let k = means.len();
    if k < 2 || methods.len() != k {
        return Err(Error::InvalidArgument(
            "pairwise report needs at least two named methods".into(),
        ));
    }
    let ranks = average_ranks(means)?;
    let mut p_values = vec![vec![None; k]; k];
    let mut worse = vec![vec![false; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let p = wilcoxon_signed_rank(&means[i], &means[j], method)?.p_value;
            p_values[i][j] = Some(p);
            p_values[j][i] = Some(p);
            worse[i][j] = ranks[i] > ranks[j];
            worse[j][i] = ranks[j] > ranks[i];
        }
    }
    Ok(PairwiseReport {
        methods: methods.to_vec(),
        p_values,
        worse,
        average_ranks: ranks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[0.3, 0.1, 0.3, 0.2]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(midranks(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn wilcoxon_small_exact() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = wilcoxon_signed_rank(&a, &b, WilcoxonMethod::Auto).unwrap();
        assert!(r.exact);
        assert!((r.p_value - 0.0625).abs() < 1e-15);
        let same = wilcoxon_signed_rank(&a, &a, WilcoxonMethod::Auto).unwrap();
        assert!(same.degenerate);
        assert_eq!(same.p_value, 1.0);
        assert!(wilcoxon_signed_rank(&a[..2], &b[..2], WilcoxonMethod::Auto).is_err());
    }

    #[test]
    fn wilcoxon_dominant_eighteen() {
        let a: Vec<f64> = (0..18).map(|i| 0.1 + i as f64 * 0.01).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.05).collect();
        let r = wilcoxon_signed_rank(&a, &b, WilcoxonMethod::Exact).unwrap();
        assert!((r.p_value - 2.0 / 2f64.powi(18)).abs() < 1e-18);
        let auto = wilcoxon_signed_rank(&a, &b, WilcoxonMethod::Auto).unwrap();
        assert!(!auto.exact);
    }

    #[test]
    fn friedman_identical_methods() {
        let m = vec![vec![0.2, 0.3, 0.1]; 3];
        let f = friedman(&m).unwrap();
        assert_eq!(f.statistic, 0.0);
        assert!((f.p_value - 1.0).abs() < 1e-12);
        assert!(friedman(&m[..2]).is_err());
    }

    #[test]
    fn critical_difference() {
        let cd = nemenyi_cd(4, 18, 0.05).unwrap();
        assert!((cd - 2.569 * (20.0f64 / 108.0).sqrt()).abs() < 1e-12);
        assert!(nemenyi_cd(11, 18, 0.05).is_err());
        assert!(nemenyi_cd(4, 18, 0.01).is_err());
        assert!(nemenyi_cd(4, 1, 0.05).is_err());
    }

    #[test]
    fn groups_are_maximal_runs() {
        let ranks = [3.39, 2.81, 1.89, 1.92];
        let cd = nemenyi_cd(4, 18, 0.05).unwrap();
        assert_eq!(nemenyi_groups(&ranks, cd), vec![vec![2, 3, 1], vec![1, 0]]);
        assert!(nemenyi_groups(&[1.0, 2.0, 3.0], 0.5).is_empty());
    }

    #[test]
    fn table_validation() {
        let row = |m: &str, d: &str, r: u64, e: f64| ResultRow {
            method: m.into(),
            dataset: d.into(),
            repetition: r,
            error: e,
        };
        let ok = ResultTable::from_rows(&[row("a", "x", 0, 0.1), row("b", "x", 0, 0.2)]).unwrap();
        assert_eq!(average_errors(&ok), vec![vec![0.1], vec![0.2]]);
        assert!(ResultTable::from_rows(&[row("a", "x", 0, 0.1), row("b", "y", 0, 0.2)]).is_err());
        assert!(ResultTable::from_rows(&[row("a", "x", 0, 1.5)]).is_err());
        assert!(ResultTable::from_rows(&[row("a", "x", 0, 0.1), row("a", "x", 0, 0.2)]).is_err());
    }

    #[test]
    fn report_markers() {
        let methods = vec!["a".to_string(), "b".to_string()];
        let a: Vec<f64> = (0..18).map(|i| 0.1 + i as f64 * 0.01).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.05).collect();
        let rep = pairwise_report(&methods, &[a, b], WilcoxonMethod::Exact).unwrap();
        assert_eq!(rep.p_values[0][1], rep.p_values[1][0]);
        assert_eq!(rep.cell(0, 0, 0.05), "-");
        assert!(rep.cell(0, 1, 0.05).starts_with("**"));
        assert!(rep.cell(1, 0, 0.05).starts_with("(**"));
    }
}
