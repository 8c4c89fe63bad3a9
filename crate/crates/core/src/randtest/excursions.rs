use super::special::{erfc, igamc};
use super::{BitSequence, Computed, StsError};

pub const EXCURSION_STATES: [i64; 8] = [-4, -3, -2, -1, 1, 2, 3, 4];
pub const VARIANT_STATES: [i64; 18] = [-9, -8, -7, -6, -5, -4, -3, -2, -1, 1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Walk S_1..S_n followed by the closing zero.
fn walk(seq: &BitSequence) -> Vec<i64> {
    let mut s = 0i64;
    let mut out: Vec<i64> = seq
        .bits()
        .iter()
        .map(|&b| {
            s += 2 * i64::from(b) - 1;
            s
        })
        .collect();
    out.push(0);
    out
}

/// Number of cycles J: zeros of the closed walk (the closing zero counts).
pub fn cycle_count(seq: &BitSequence) -> usize {
    if seq.is_empty() {
        return 0;
    }
    walk(seq).iter().filter(|&&v| v == 0).count()
}

fn state_probabilities(x: i64) -> [f64; 6] {
    let ax = x.unsigned_abs() as f64;
    let q = 1.0 - 1.0 / (2.0 * ax);
    let mut p = [0.0; 6];
    p[0] = q;
    for (k, slot) in p.iter_mut().enumerate().take(5).skip(1) {
        *slot = 1.0 / (4.0 * ax * ax) * q.powi(k as i32 - 1);
    }
    p[5] = 1.0 / (2.0 * ax) * q.powi(4);
    p
}

/// Random excursions test, one p-value per state in [`EXCURSION_STATES`].
/// Statistics: `[J, chi2 per state...]`.
pub fn random_excursions(seq: &BitSequence) -> Result<Computed, StsError> {
    if seq.is_empty() {
        return Err(StsError::SequenceTooShort {
            test: "random_excursions".into(),
            n: 0,
            required: 1,
        });
    }
    let s = walk(seq);
    // nu[state][k]: cycles visiting the state exactly k times (k >= 5 pooled).
    let mut nu = [[0.0f64; 6]; 8];
    let mut visits = [0usize; 8];
    let mut j = 0usize;
    for &v in &s {
        if v == 0 {
            for (row, count) in nu.iter_mut().zip(visits.iter_mut()) {
                row[(*count).min(5)] += 1.0;
                *count = 0;
            }
            j += 1;
        } else if (-4..=4).contains(&v) {
            let idx = if v < 0 { (v + 4) as usize } else { (v + 3) as usize };
            visits[idx] += 1;
        }
    }
    let jf = j as f64;
    let mut p_values = Vec::with_capacity(8);
    let mut stats = vec![jf];
    for (row, &x) in nu.iter().zip(EXCURSION_STATES.iter()) {
        let probs = state_probabilities(x);
        let chi2: f64 = row
            .iter()
            .zip(probs)
            .map(|(&o, p)| (o - jf * p).powi(2) / (jf * p))
            .sum();
        p_values.push(igamc(2.5, chi2 / 2.0)?);
        stats.push(chi2);
    }
    Ok(Computed::new(p_values, stats))
}

/// Random excursions variant, one p-value per state in [`VARIANT_STATES`].
/// Statistics: `[J, visit count per state...]`.
pub fn random_excursions_variant(seq: &BitSequence) -> Result<Computed, StsError> {
    if seq.is_empty() {
        return Err(StsError::SequenceTooShort {
            test: "random_excursions_variant".into(),
            n: 0,
            required: 1,
        });
    }
    let s = walk(seq);
    let j = s.iter().filter(|&&v| v == 0).count() as f64;
    let mut p_values = Vec::with_capacity(18);
    let mut stats = vec![j];
    for &x in &VARIANT_STATES {
        let xi = s.iter().filter(|&&v| v == x).count() as f64;
        let p = erfc((xi - j).abs() / (2.0 * j * (4.0 * x.unsigned_abs() as f64 - 2.0)).sqrt());
        p_values.push(p);
        stats.push(xi);
    }
    Ok(Computed::new(p_values, stats))
}
