//! Migration, segregation and inequality indices.
//!
//! Everything here is a pure function of its arguments.

use crate::error::{Error, Result};
use crate::model::SchoolId;
use crate::params::SpfCoefficients;

/// Net migration of a school or sector in percent:
/// `(prev - curr) / prev * 100`. Positive means the school shrank.
/// Zero when both counts are zero.
pub fn migration_index(prev: usize, curr: usize) -> Result<f64> {
    match (prev, curr) {
        (0, 0) => Ok(0.0),
        (0, c) => Err(Error::UndefinedIndex { curr: c }),
        (p, c) => Ok((p as f64 - c as f64) / p as f64 * 100.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Indices into the input with wealth strictly below the pivot.
    pub poor: Vec<usize>,
    /// Indices with wealth at or above the pivot.
    pub rich: Vec<usize>,
    /// Mean wealth.
    pub pivot: f64,
}

/// Split a population into poor and rich around its mean wealth.
pub fn partition_poor_rich(wealths: &[f64]) -> Result<Partition> {
    if wealths.is_empty() {
        return Err(Error::EmptyInput("partition_poor_rich"));
    }
    let pivot = wealths.iter().sum::<f64>() / wealths.len() as f64;
    let (rich, poor): (Vec<usize>, Vec<usize>) =
        (0..wealths.len()).partition(|&i| wealths[i] >= pivot);
    Ok(Partition { poor, rich, pivot })
}

/// Poor/rich composition of one school.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupCounts {
    pub school: SchoolId,
    pub t_poor: usize,
    pub t_rich: usize,
    pub total: usize,
    /// Mean wealth of the poor students, 0 when there are none.
    pub w_poor_avg: f64,
    /// Mean wealth of the rich students, 0 when there are none.
    pub w_rich_avg: f64,
}

impl GroupCounts {
    pub fn from_counts(school: SchoolId, t_poor: usize, t_rich: usize) -> Self {
        Self {
            school,
            t_poor,
            t_rich,
            total: t_poor + t_rich,
            w_poor_avg: 0.0,
            w_rich_avg: 0.0,
        }
    }

    /// Tally the students of one school given their wealths and the pivot.
    pub fn tally(school: SchoolId, wealths: impl IntoIterator<Item = f64>, pivot: f64) -> Self {
        let (mut np, mut nr, mut sp, mut sr) = (0usize, 0usize, 0.0, 0.0);
        for w in wealths {
            if w < pivot {
                np += 1;
                sp += w;
            } else {
                nr += 1;
                sr += w;
            }
        }
        Self {
            school,
            t_poor: np,
            t_rich: nr,
            total: np + nr,
            w_poor_avg: if np > 0 { sp / np as f64 } else { 0.0 },
            w_rich_avg: if nr > 0 { sr / nr as f64 } else { 0.0 },
        }
    }
}

/// `|poor - rich| / total` for one school.
pub fn mutual_segregation(g: &GroupCounts) -> Result<f64> {
    if g.total == 0 {
        return Err(Error::EmptySchool);
    }
    Ok(g.t_poor.abs_diff(g.t_rich) as f64 / g.total as f64)
}

/// Mean mutual segregation over schools; empty schools count as 0.
pub fn count_segregation_index(all: &[GroupCounts]) -> Result<f64> {
    if all.is_empty() {
        return Err(Error::EmptyInput("count_segregation_index"));
    }
    let sum: f64 = all
        .iter()
        .map(|g| mutual_segregation(g).unwrap_or(0.0))
        .sum();
    Ok(sum / all.len() as f64)
}

/// Mean over schools of half the gap between the average wealth of poor
/// and rich students. A missing group enters with average 0, so an empty
/// school contributes 0 and a one-group school half its group's average.
pub fn wealth_segregation_index(all: &[GroupCounts]) -> Result<f64> {
    if all.is_empty() {
        return Err(Error::EmptyInput("wealth_segregation_index"));
    }
    let sum: f64 = all
        .iter()
        .map(|g| ((g.w_poor_avg - g.w_rich_avg) / 2.0).abs())
        .sum();
    Ok(sum / all.len() as f64)
}

/// School performance factor `alpha*F + beta*H + gamma/D + delta/C + phi`.
pub fn spf(fee: f64, hours: f64, distance: f64, class: f64, k: &SpfCoefficients) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    if !(class > 0.0) {
        return Err(Error::Domain(format!("class size must be positive, got {class}")));
    }
    Ok(k.alpha * fee + k.beta * hours + k.gamma / distance + k.delta / class + k.phi)
}

/// Performance factor with only the fee varying.
pub fn spf_fee(fee: f64, k: &SpfCoefficients) -> f64 {
    k.alpha * fee + k.phi_f
}

/// Performance factor with only home study hours varying.
pub fn spf_home_hours(hours: f64, k: &SpfCoefficients) -> f64 {
    k.beta * hours + k.phi_h
}

/// Performance factor with only class size varying.
pub fn spf_class(class: f64, k: &SpfCoefficients) -> Result<f64> {
    if !(class > 0.0) {
        return Err(Error::Domain(format!("class size must be positive, got {class}")));
    }
    Ok(k.delta / class + k.phi_c)
}

/// Expected in-migration into a school with class size `class`.
pub fn expected_in_migration(class: f64, lambda_mig: f64) -> Result<f64> {
    if !(class > 0.0) {
        return Err(Error::Domain(format!("class size must be positive, got {class}")));
    }
    Ok(lambda_mig / class)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurve {
    /// `(population share, cumulative value share)`, from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub gini: f64,
}

/// Lorenz curve of non-negative values, with the Gini coefficient taken as
/// one minus twice the trapezoidal area under the curve.
pub fn lorenz(values: &[f64]) -> Result<LorenzCurve> {
    if values.is_empty() {
        return Err(Error::EmptyInput("lorenz"));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("lorenz needs finite non-negative values, got {v}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyInput("lorenz (all values zero)"));
    }
    let n = sorted.len() as f64;
    let mut points = Vec::with_capacity(sorted.len() + 1);
    points.push((0.0, 0.0));
    let mut cum = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        cum += v;
        points.push(((k + 1) as f64 / n, cum / total));
    }
    if let Some(last) = points.last_mut() {
        *last = (1.0, 1.0);
    }
    let area: f64 = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(LorenzCurve {
        points,
        gini: 1.0 - 2.0 * area,
    })
}

/// Gini coefficient of `values` with negatives clamped to zero; 0 for an
/// empty or all-zero population.
pub fn gini_or_zero(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().map(|x| x.max(0.0)).collect();
    lorenz(&v).map(|l| l.gini).unwrap_or(0.0)
}
