//! The fifteen SP 800-22 randomness tests, tuned for 4096-byte fragments.
//!
//! Every test is a pure function of the bit sequence and [`StsConfig`].
//! Length recommendations that a 32768-bit input cannot meet are handled by
//! `paper_mode`: when on, the test is computed but cannot pass; when off, it
//! is reported as inapplicable.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::Fragment;

mod bits;
pub mod cusum;
pub mod dft;
pub mod excursions;
pub mod frequency;
pub mod linear;
pub mod rank;
pub mod report;
pub mod runs;
pub mod serial;
pub mod special;
pub mod templates;
pub mod universal;

pub use bits::{bits_from_fragment, BitSequence};
pub use report::{aggregate_pass_rate, ChunkResult, StsReport, ToolPassRate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StsError {
    #[error("unknown test {0:?}")]
    UnknownTest(String),
    #[error("{test}: sequence of {n} bits is too short (needs {required})")]
    SequenceTooShort { test: String, n: usize, required: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no chunks in group {0:?}")]
    EmptyGroup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TestName {
    Frequency,
    BlockFrequency,
    Runs,
    LongestRun,
    Rank,
    Dft,
    NonOverlappingTemplate,
    OverlappingTemplate,
    Universal,
    LinearComplexity,
    Serial,
    ApproximateEntropy,
    CumulativeSums,
    RandomExcursions,
    RandomExcursionsVariant,
}

impl TestName {
    /// All tests in canonical order.
    pub const ALL: [TestName; 15] = [
        TestName::Frequency,
        TestName::BlockFrequency,
        TestName::Runs,
        TestName::LongestRun,
        TestName::Rank,
        TestName::Dft,
        TestName::NonOverlappingTemplate,
        TestName::OverlappingTemplate,
        TestName::Universal,
        TestName::LinearComplexity,
        TestName::Serial,
        TestName::ApproximateEntropy,
        TestName::CumulativeSums,
        TestName::RandomExcursions,
        TestName::RandomExcursionsVariant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TestName::Frequency => "frequency",
            TestName::BlockFrequency => "block_frequency",
            TestName::Runs => "runs",
            TestName::LongestRun => "longest_run",
            TestName::Rank => "rank",
            TestName::Dft => "dft",
            TestName::NonOverlappingTemplate => "non_overlapping_template",
            TestName::OverlappingTemplate => "overlapping_template",
            TestName::Universal => "universal",
            TestName::LinearComplexity => "linear_complexity",
            TestName::Serial => "serial",
            TestName::ApproximateEntropy => "approximate_entropy",
            TestName::CumulativeSums => "cumulative_sums",
            TestName::RandomExcursions => "random_excursions",
            TestName::RandomExcursionsVariant => "random_excursions_variant",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TestName::Frequency => "Frequency (Monobit)",
            TestName::BlockFrequency => "Frequency within a Block",
            TestName::Runs => "Runs",
            TestName::LongestRun => "Longest Run of Ones in a Block",
            TestName::Rank => "Binary Matrix Rank",
            TestName::Dft => "Discrete Fourier Transform (Spectral)",
            TestName::NonOverlappingTemplate => "Non-Overlapping Template Matching",
            TestName::OverlappingTemplate => "Overlapping Template Matching",
            TestName::Universal => "Maurer's Universal Statistical",
            TestName::LinearComplexity => "Linear Complexity",
            TestName::Serial => "Serial",
            TestName::ApproximateEntropy => "Approximate Entropy",
            TestName::CumulativeSums => "Cumulative Sums",
            TestName::RandomExcursions => "Random Excursions",
            TestName::RandomExcursionsVariant => "Random Excursions Variant",
        }
    }
}

impl fmt::Display for TestName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestName {
    type Err = StsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        TestName::ALL
            .into_iter()
            .find(|t| t.as_str() == key || t.title().to_ascii_lowercase().replace(['-', ' '], "_") == key)
            .or(match key.as_str() {
                "monobit" => Some(TestName::Frequency),
                "spectral" | "fft" => Some(TestName::Dft),
                "cusum" => Some(TestName::CumulativeSums),
                "apen" => Some(TestName::ApproximateEntropy),
                _ => None,
            })
            .ok_or_else(|| StsError::UnknownTest(s.to_string()))
    }
}

/// How a test with several p-values is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiPRule {
    /// Every p-value must reach the Šidák-adjusted level 1 - (1 - alpha)^(1/k),
    /// which keeps the per-test false-failure rate at alpha.
    #[default]
    Sidak,
    /// Every p-value must reach alpha.
    AllPass,
}

impl FromStr for MultiPRule {
    type Err = StsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sidak" => Ok(MultiPRule::Sidak),
            "all" | "all_pass" | "allpass" => Ok(MultiPRule::AllPass),
            other => Err(StsError::InvalidConfig(format!("unknown multi-p rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StsConfig {
    pub alpha: f64,
    pub block_frequency_m: usize,
    pub longest_run_m: usize,
    pub template_length_m: usize,
    /// One block keeps the per-block template counts large enough for the
    /// chi-square approximation at n = 32768; eight blocks over-reject.
    pub non_overlapping_blocks: usize,
    pub overlapping_m: usize,
    pub universal_l: usize,
    pub universal_q: usize,
    pub serial_m: usize,
    pub approx_entropy_m: usize,
    pub linear_complexity_m: usize,
    pub paper_mode: bool,
    pub multi_p_rule: MultiPRule,
}

impl Default for StsConfig {
    fn default() -> Self {
        StsConfig {
            alpha: 0.01,
            block_frequency_m: 512,
            longest_run_m: 128,
            template_length_m: 9,
            non_overlapping_blocks: 1,
            overlapping_m: 1032,
            universal_l: 6,
            universal_q: 640,
            serial_m: 5,
            approx_entropy_m: 5,
            linear_complexity_m: 500,
            paper_mode: true,
            multi_p_rule: MultiPRule::Sidak,
        }
    }
}

impl StsConfig {
    pub fn validate(&self) -> Result<(), StsError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(StsError::InvalidConfig(format!("alpha {} not in (0,1)", self.alpha)));
        }
        let sizes = [
            ("block_frequency_m", self.block_frequency_m),
            ("longest_run_m", self.longest_run_m),
            ("template_length_m", self.template_length_m),
            ("non_overlapping_blocks", self.non_overlapping_blocks),
            ("overlapping_m", self.overlapping_m),
            ("universal_l", self.universal_l),
            ("universal_q", self.universal_q),
            ("serial_m", self.serial_m),
            ("approx_entropy_m", self.approx_entropy_m),
            ("linear_complexity_m", self.linear_complexity_m),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(StsError::InvalidConfig(format!("{name} must be at least 1")));
        }
        Ok(())
    }

    /// Significance level a single p-value of a `k`-valued test must reach.
    pub fn level_for(&self, k: usize) -> f64 {
        match self.multi_p_rule {
            MultiPRule::AllPass => self.alpha,
            MultiPRule::Sidak if k <= 1 => self.alpha,
            MultiPRule::Sidak => 1.0 - (1.0 - self.alpha).powf(1.0 / k as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "Pass",
            Verdict::Fail => "Fail",
            Verdict::Inapplicable => "Inapplicable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Raw output of one test before a verdict is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct Computed {
    pub p_values: Vec<f64>,
    pub statistic: Vec<f64>,
}

impl Computed {
    pub fn new(p_values: Vec<f64>, statistic: Vec<f64>) -> Self {
        Computed { p_values, statistic }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub test: TestName,
    pub p_values: Vec<f64>,
    pub statistic: Vec<f64>,
    pub verdict: Verdict,
    /// Why the preconditions were not met, if they were not.
    pub note: Option<String>,
}

impl TestResult {
    pub fn min_p(&self) -> f64 {
        self.p_values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Pearson statistic for observed class counts against probabilities.
pub(crate) fn chi_square(counts: &[f64], probs: &[f64], n: f64) -> f64 {
    counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| (o - n * p).powi(2) / (n * p))
        .sum()
}

const MIN_BITS: usize = 100;

/// Smallest n for which the test can be computed at all.
fn hard_minimum(name: TestName, cfg: &StsConfig) -> usize {
    let structural = match name {
        TestName::BlockFrequency => cfg.block_frequency_m,
        TestName::LongestRun => cfg.longest_run_m,
        TestName::Rank => rank::MATRIX_DIM * rank::MATRIX_DIM,
        TestName::NonOverlappingTemplate => cfg.template_length_m * cfg.non_overlapping_blocks,
        TestName::OverlappingTemplate => cfg.overlapping_m,
        TestName::Universal => (cfg.universal_q + 1) * cfg.universal_l,
        TestName::LinearComplexity => cfg.linear_complexity_m,
        TestName::Serial => cfg.serial_m + 1,
        TestName::ApproximateEntropy => cfg.approx_entropy_m + 2,
        _ => 0,
    };
    structural.max(MIN_BITS)
}

fn log2_floor(n: usize) -> usize {
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

/// The SP 800-22 length/parameter recommendation the input violates, if any.
fn recommendation_violation(name: TestName, n: usize, cfg: &StsConfig) -> Option<String> {
    let nf = n as f64;
    match name {
        TestName::BlockFrequency => {
            let m = cfg.block_frequency_m;
            (m < 20 || (m as f64) <= 0.01 * nf || n / m >= 100)
                .then(|| format!("block size {m} outside M >= 20, M > 0.01n, N < 100"))
        }
        TestName::LongestRun => {
            let need = match cfg.longest_run_m {
                8 => 128,
                128 => 6272,
                _ => 750_000,
            };
            (n < need).then(|| format!("needs n >= {need}"))
        }
        TestName::Rank => {
            let matrices = n / (rank::MATRIX_DIM * rank::MATRIX_DIM);
            (matrices < 38).then(|| format!("{matrices} matrices available, 38 recommended"))
        }
        TestName::Dft => (n < 1000).then(|| "needs n >= 1000".to_string()),
        TestName::NonOverlappingTemplate => {
            let blocks = cfg.non_overlapping_blocks;
            ((n / blocks) as f64 <= 0.01 * nf || blocks > 100)
                .then(|| format!("{blocks} blocks outside N <= 100, M > 0.01n"))
        }
        TestName::OverlappingTemplate => (n < 1_000_000).then(|| "needs n >= 10^6".to_string()),
        TestName::Universal => {
            let l = cfg.universal_l;
            let q = cfg.universal_q;
            let k = (n / l).saturating_sub(q);
            (q < 10 << l || k < 1000 << l)
                .then(|| format!("Q = {q}, K = {k} below Q >= 10*2^L, K >= 1000*2^L"))
        }
        TestName::LinearComplexity => {
            let m = cfg.linear_complexity_m;
            (n < 1_000_000 || !(500..=5000).contains(&m) || n / m < 200)
                .then(|| "needs n >= 10^6, 500 <= M <= 5000, N >= 200".to_string())
        }
        TestName::Serial => {
            let limit = log2_floor(n).saturating_sub(2);
            (cfg.serial_m >= limit).then(|| format!("m must be below {limit}"))
        }
        TestName::ApproximateEntropy => {
            let limit = log2_floor(n).saturating_sub(5);
            (cfg.approx_entropy_m >= limit).then(|| format!("m must be below {limit}"))
        }
        _ => None,
    }
}

fn compute(name: TestName, seq: &BitSequence, cfg: &StsConfig) -> Result<Computed, StsError> {
    match name {
        TestName::Frequency => Ok(frequency::monobit(seq)),
        TestName::BlockFrequency => frequency::block_frequency(seq, cfg.block_frequency_m),
        TestName::Runs => Ok(runs::runs(seq)),
        TestName::LongestRun => runs::longest_run(seq, cfg.longest_run_m),
        TestName::Rank => rank::rank(seq),
        TestName::Dft => dft::dft(seq),
        TestName::NonOverlappingTemplate => {
            templates::non_overlapping(seq, cfg.template_length_m, cfg.non_overlapping_blocks)
        }
        TestName::OverlappingTemplate => {
            templates::overlapping(seq, cfg.template_length_m, cfg.overlapping_m)
        }
        TestName::Universal => universal::universal(seq, cfg.universal_l, cfg.universal_q),
        TestName::LinearComplexity => linear::linear_complexity(seq, cfg.linear_complexity_m),
        TestName::Serial => serial::serial(seq, cfg.serial_m),
        TestName::ApproximateEntropy => serial::approximate_entropy(seq, cfg.approx_entropy_m),
        TestName::CumulativeSums => Ok(cusum::cumulative_sums(seq)),
        TestName::RandomExcursions => excursions::random_excursions(seq),
        TestName::RandomExcursionsVariant => excursions::random_excursions_variant(seq),
    }
}

/// Cycle-count condition of the excursion tests. Strict mode uses the
/// SP 800-22 applicability bound; paper mode only rejects walks that never
/// return to the origin.
fn excursion_condition(j: usize, n: usize, cfg: &StsConfig) -> Option<String> {
    if cfg.paper_mode {
        (j < 2).then(|| "walk never returns to the origin".to_string())
    } else {
        let bound = (0.005 * (n as f64).sqrt()).max(500.0);
        ((j as f64) < bound).then(|| format!("J = {j} cycles, fewer than {bound}"))
    }
}

/// Runs one test and attaches its verdict.
pub fn run_single_test(name: TestName, seq: &BitSequence, cfg: &StsConfig) -> Result<TestResult, StsError> {
    cfg.validate()?;
    let n = seq.len();
    let required = hard_minimum(name, cfg);
    if n < required {
        return Err(StsError::SequenceTooShort {
            test: name.as_str().into(),
            n,
            required,
        });
    }
    let computed = compute(name, seq, cfg)?;
    let mut note = recommendation_violation(name, n, cfg);
    if note.is_none() && matches!(name, TestName::RandomExcursions | TestName::RandomExcursionsVariant) {
        note = excursion_condition(computed.statistic[0] as usize, n, cfg);
    }
    let level = cfg.level_for(computed.p_values.len());
    let verdict = match (&note, cfg.paper_mode) {
        (Some(_), false) => Verdict::Inapplicable,
        (Some(_), true) => Verdict::Fail,
        (None, _) if computed.p_values.iter().all(|&p| p >= level) => Verdict::Pass,
        (None, _) => Verdict::Fail,
    };
    Ok(TestResult {
        test: name,
        p_values: computed.p_values,
        statistic: computed.statistic,
        verdict,
        note,
    })
}

/// Looks a test up by name and runs it.
pub fn run_named_test(name: &str, seq: &BitSequence, cfg: &StsConfig) -> Result<TestResult, StsError> {
    run_single_test(name.parse()?, seq, cfg)
}

pub fn test_frequency(seq: &BitSequence, cfg: &StsConfig) -> Result<TestResult, StsError> {
    run_single_test(TestName::Frequency, seq, cfg)
}

pub fn test_runs(seq: &BitSequence, cfg: &StsConfig) -> Result<TestResult, StsError> {
    run_single_test(TestName::Runs, seq, cfg)
}

pub fn test_cumulative_sums(seq: &BitSequence, cfg: &StsConfig) -> Result<TestResult, StsError> {
    run_single_test(TestName::CumulativeSums, seq, cfg)
}

/// All fifteen tests on a bit sequence, in canonical order. Errors turn into
/// non-passing verdicts.
pub fn run_suite_bits(seq: &BitSequence, cfg: &StsConfig) -> Vec<TestResult> {
    TestName::ALL
        .iter()
        .map(|&name| {
            run_single_test(name, seq, cfg).unwrap_or_else(|e| TestResult {
                test: name,
                p_values: vec![0.0],
                statistic: Vec::new(),
                verdict: if cfg.paper_mode { Verdict::Fail } else { Verdict::Inapplicable },
                note: Some(e.to_string()),
            })
        })
        .collect()
}

/// All fifteen tests on a fragment.
pub fn run_suite(f: &Fragment, cfg: &StsConfig) -> Vec<TestResult> {
    run_suite_bits(&bits_from_fragment(f), cfg)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_fragment(seed: u64) -> Fragment {
        let mut bytes = [0u8; 4096];
        SplitMix64::new(seed).fill_bytes(&mut bytes);
        Fragment::new(&bytes, "random").unwrap()
    }

    #[test]
    fn names_roundtrip_and_unknown() {
        for t in TestName::ALL {
            assert_eq!(t.as_str().parse::<TestName>().unwrap(), t);
            assert_eq!(t.title().parse::<TestName>().unwrap(), t);
        }
        assert!(matches!("entropy".parse::<TestName>(), Err(StsError::UnknownTest(_))));
    }

    #[test]
    fn suite_has_fifteen_in_order_with_valid_p() {
        let r = run_suite(&random_fragment(1), &StsConfig::default());
        assert_eq!(r.iter().map(|t| t.test).collect::<Vec<_>>(), TestName::ALL.to_vec());
        for t in &r {
            assert!(!t.p_values.is_empty());
            assert!(t.p_values.iter().all(|p| (0.0..=1.0).contains(p)), "{t:?}");
        }
        let counts: Vec<usize> = r.iter().map(|t| t.p_values.len()).collect();
        assert_eq!(counts[6], 148);
        assert_eq!(counts[10], 2);
        assert_eq!(counts[12], 2);
        assert_eq!(counts[13], 8);
        assert_eq!(counts[14], 18);
    }

    #[test]
    fn all_zero_fragment_mostly_fails() {
        let f = Fragment::new(&[0u8; 4096], "zero").unwrap();
        let r = run_suite(&f, &StsConfig::default());
        let fails = r.iter().filter(|t| t.verdict == Verdict::Fail).count();
        assert!(fails >= 13, "{fails}");
        let exc = &r[13];
        assert_eq!(exc.verdict, Verdict::Fail);
    }

    #[test]
    fn identical_input_identical_results() {
        let cfg = StsConfig::default();
        assert_eq!(run_suite(&random_fragment(5), &cfg), run_suite(&random_fragment(5), &cfg));
    }

    #[test]
    fn length_gated_tests_by_mode() {
        let f = random_fragment(2);
        let paper = run_suite(&f, &StsConfig::default());
        let strict = run_suite(&f, &StsConfig { paper_mode: false, ..Default::default() });
        for name in [
            TestName::Rank,
            TestName::OverlappingTemplate,
            TestName::Universal,
            TestName::LinearComplexity,
        ] {
            let i = name as usize;
            assert_eq!(paper[i].verdict, Verdict::Fail);
            assert_eq!(strict[i].verdict, Verdict::Inapplicable);
            assert_eq!(paper[i].p_values, strict[i].p_values);
            assert!(paper[i].note.is_some());
        }
        // A 32768-bit walk has far fewer than 500 cycles.
        assert_eq!(strict[13].verdict, Verdict::Inapplicable);
        assert_eq!(strict[14].verdict, Verdict::Inapplicable);
        assert!(!strict.iter().any(|t| t.verdict == Verdict::Fail && t.note.is_some()));
        assert!(!paper.iter().any(|t| t.verdict == Verdict::Inapplicable));
    }

    #[test]
    fn short_sequence_errors() {
        let seq = BitSequence::from_str01("1011010101").unwrap();
        assert!(matches!(
            test_frequency(&seq, &StsConfig::default()),
            Err(StsError::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn frequency_extremes_via_suite_api() {
        let cfg = StsConfig::default();
        let zeros = BitSequence::from_bits(vec![0; 32768]);
        assert_eq!(test_frequency(&zeros, &cfg).unwrap().verdict, Verdict::Fail);
        assert_eq!(test_runs(&zeros, &cfg).unwrap().p_values, vec![0.0]);
        let alt = BitSequence::from_bits((0..32768).map(|i| (i % 2) as u8).collect());
        let f = test_frequency(&alt, &cfg).unwrap();
        assert_eq!((f.p_values[0], f.verdict), (1.0, Verdict::Pass));
        assert_eq!(test_runs(&alt, &cfg).unwrap().verdict, Verdict::Fail);
        assert_eq!(test_cumulative_sums(&alt, &cfg).unwrap().verdict, Verdict::Pass);
        assert_eq!(test_cumulative_sums(&zeros, &cfg).unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn sidak_level() {
        let cfg = StsConfig::default();
        assert_eq!(cfg.level_for(1), 0.01);
        let l = cfg.level_for(148);
        assert!((1.0 - (1.0 - l).powi(148) - 0.01).abs() < 1e-12);
        let all = StsConfig { multi_p_rule: MultiPRule::AllPass, ..Default::default() };
        assert_eq!(all.level_for(148), 0.01);
    }

    #[test]
    fn invalid_alpha_rejected() {
        let cfg = StsConfig { alpha: 1.5, ..Default::default() };
        let seq = BitSequence::from_bits(vec![0; 1000]);
        assert!(matches!(test_frequency(&seq, &cfg), Err(StsError::InvalidConfig(_))));
    }
}
