//! Self-contained statistical kernel: distribution functions, the three
//! hypothesis tests the audits run (pooled t, Pearson chi-square on a 2x2
//! table, Mann-Whitney U with tie correction), and a percentile bootstrap.

pub mod special;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding;

pub use special::{chi2_sf_df1, erf, erfc, inc_beta, ln_gamma, normal_cdf, normal_sf, t_cdf};

/// Outcome of a hypothesis test. `p_two_sided` is the default reported
/// value; the one-sided p tests the direction stated in `direction`.
/// For z-based tests the two p-values satisfy
/// `p_two_sided = 2 * min(p_one_sided, 1 - p_one_sided)` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Option<f64>,
    pub z: Option<f64>,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub direction: &'static str,
}

fn two_sided_from_one(p_one: f64) -> f64 {
    2.0 * p_one.min(1.0 - p_one)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean and sample standard deviation (sd = 0 for fewer than two values).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, 0.0);
    }
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, 0.0);
    }
    (m, sample_variance(xs, m).sqrt())
}

/// Pooled-variance Student t-test, df = n_x + n_y - 2. Positive t means
/// the first sample has the higher mean.
pub fn student_t_test(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::invalid(format!(
            "t-test requires at least 2 values per sample, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mx, my) = (mean(x), mean(y));
    let df = nx + ny - 2.0;
    let pooled = ((nx - 1.0) * sample_variance(x, mx) + (ny - 1.0) * sample_variance(y, my)) / df;
    let direction = "positive t: first sample mean higher";
    if pooled <= 0.0 {
        if mx == my {
            return Ok(TestResult {
                statistic: 0.0,
                df: Some(df),
                z: None,
                p_one_sided: 0.5,
                p_two_sided: 1.0,
                direction,
            });
        }
        return Err(Error::Degenerate(
            "zero pooled variance with unequal means".to_string(),
        ));
    }
    let t = (mx - my) / (pooled * (1.0 / nx + 1.0 / ny)).sqrt();
    let p_one = 1.0 - t_cdf(t, df)?;
    Ok(TestResult {
        statistic: t,
        df: Some(df),
        z: None,
        p_one_sided: p_one,
        p_two_sided: two_sided_from_one(p_one),
        direction,
    })
}

/// Pearson chi-square on the 2x2 table [[a, b], [c, d]], df = 1, no
/// continuity correction. The signed root of the statistic is reported as
/// z; positive z means the first row is relatively heavier in the first
/// column.
pub fn chi_square_2x2(a: u64, b: u64, c: u64, d: u64) -> Result<TestResult> {
    let (af, bf, cf, df_) = (a as f64, b as f64, c as f64, d as f64);
    let margins = [a + b, c + d, a + c, b + d];
    if margins.contains(&0) {
        return Err(Error::Degenerate(
            "chi-square table has a zero margin".to_string(),
        ));
    }
    let n = af + bf + cf + df_;
    let delta = af * df_ - bf * cf;
    let statistic =
        n * delta * delta / ((af + bf) * (cf + df_) * (af + cf) * (bf + df_));
    let z = delta.signum() * statistic.sqrt();
    let p_two = chi2_sf_df1(statistic)?;
    let p_one = if z >= 0.0 {
        0.5 * p_two
    } else {
        1.0 - 0.5 * p_two
    };
    Ok(TestResult {
        statistic,
        df: Some(1.0),
        z: Some(z),
        p_one_sided: p_one,
        p_two_sided: p_two,
        direction: "positive z: first row heavier in first column",
    })
}

/// Average ranks (1-based) of the combined sample, midranks for ties, plus
/// the tie term sum((t^3 - t)) over tie groups. All rank values are exact
/// half-integers in f64.
fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut tie_sum = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        let t = (end - start) as f64;
        tie_sum += t * t * t - t;
        start = end;
    }
    (ranks, tie_sum)
}

/// Options for the Mann-Whitney normal approximation.
#[derive(Debug, Clone, Copy)]
pub struct MannWhitneyOptions {
    /// Apply the 0.5 continuity correction toward zero (default true).
    pub continuity: bool,
}

impl Default for MannWhitneyOptions {
    fn default() -> Self {
        MannWhitneyOptions { continuity: true }
    }
}

/// Mann-Whitney U test with tie-corrected normal approximation.
/// The statistic is U_x = #\{x_i > y_j\} + 0.5 #ties; positive z means the
/// first sample ranks higher. Errors when every value is identical.
pub fn mann_whitney_u(x: &[f64], y: &[f64], opts: MannWhitneyOptions) -> Result<TestResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid(
            "mann-whitney requires at least one value per sample".to_string(),
        ));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mann-whitney input".to_string()));
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let n = nx + ny;
    let combined: Vec<f64> = x.iter().chain(y.iter()).copied().collect();
    let (ranks, tie_sum) = average_ranks(&combined);
    let rank_sum_x: f64 = ranks[..x.len()].iter().sum();
    let u_x = rank_sum_x - nx * (nx + 1.0) / 2.0;
    let mu = nx * ny / 2.0;
    let sigma2 = nx * ny / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
    if sigma2 <= 0.0 {
        return Err(Error::Degenerate(
            "mann-whitney variance is zero (all values tied)".to_string(),
        ));
    }
    let d = u_x - mu;
    let d_adj = if opts.continuity {
        d.signum() * (d.abs() - 0.5).max(0.0)
    } else {
        d
    };
    let z = d_adj / sigma2.sqrt();
    let p_one = normal_sf(z);
    Ok(TestResult {
        statistic: u_x,
        df: None,
        z: Some(z),
        p_one_sided: p_one,
        p_two_sided: two_sided_from_one(p_one),
        direction: "positive z: first sample ranks higher",
    })
}

/// Percentile-bootstrap summary. `mean_stat` is the statistic evaluated on
/// the original sample; the CI bounds are empirical percentiles of the
/// resample distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    pub mean_stat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_boot: usize,
    pub n_degenerate: usize,
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Resamples `records` with replacement (same total size) `n_boot` times.
/// The statistic returns None on degenerate resamples (e.g. a group left
/// empty); those are redrawn and counted in `n_degenerate`. Resample `b`
/// uses the RNG stream derived from `(seed, DOMAIN_BOOTSTRAP, b)`, so
/// resamples are independent and reproducible.
pub fn bootstrap_percentile<T, F>(
    records: &[T],
    statistic: F,
    n_boot: usize,
    seed: u64,
    level: f64,
) -> Result<BootstrapResult>
where
    T: Clone,
    F: Fn(&[T]) -> Option<f64>,
{
    if records.is_empty() {
        return Err(Error::invalid("bootstrap over an empty sample".to_string()));
    }
    if n_boot == 0 {
        return Err(Error::invalid("n_boot must be >= 1".to_string()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let mean_stat = statistic(records)
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            Error::Degenerate("statistic undefined on the original sample".to_string())
        })?;

    const MAX_TOTAL_REDRAWS: usize = 100_000;
    let mut stats = Vec::with_capacity(n_boot);
    let mut n_degenerate = 0usize;
    let mut sample: Vec<T> = Vec::with_capacity(records.len());
    for b in 0..n_boot {
        let mut rng = seeding::derived_rng(seed, seeding::DOMAIN_BOOTSTRAP, b as u64);
        loop {
            sample.clear();
            for _ in 0..records.len() {
                sample.push(records[rng.gen_range(0..records.len())].clone());
            }
            match statistic(&sample).filter(|v| v.is_finite()) {
                Some(v) => {
                    stats.push(v);
                    break;
                }
                None => {
                    n_degenerate += 1;
                    if n_degenerate > MAX_TOTAL_REDRAWS {
                        return Err(Error::Degenerate(
                            "bootstrap kept drawing degenerate resamples".to_string(),
                        ));
                    }
                }
            }
        }
    }
    stats.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let alpha = 1.0 - level;
    Ok(BootstrapResult {
        mean_stat,
        ci_low: percentile_sorted(&stats, alpha / 2.0),
        ci_high: percentile_sorted(&stats, 1.0 - alpha / 2.0),
        n_boot,
        n_degenerate,
    })
}
