//! Mamdani fuzzy inference over two inputs (scaled error and scaled
//! fractional rate of error) with seven triangular labels per universe.
//!
//! Inference uses `min` for rule activation and implication, `max` for
//! aggregation, and a uniform-grid centre of gravity for defuzzification.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LABEL_COUNT: usize = 7;

/// Linguistic labels, ordered from most negative to most positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NL,
    NM,
    NS,
    ZR,
    PS,
    PM,
    PL,
}

impl Label {
    pub const ALL: [Label; LABEL_COUNT] = [
        Label::NL,
        Label::NM,
        Label::NS,
        Label::ZR,
        Label::PS,
        Label::PM,
        Label::PL,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Label {
        Self::ALL[i]
    }

    /// Mirror image about `ZR`.
    pub fn negate(self) -> Label {
        Self::ALL[LABEL_COUNT - 1 - self.index()]
    }

    pub fn name(self) -> &'static str {
        ["NL", "NM", "NS", "ZR", "PS", "PM", "PL"][self.index()]
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown linguistic label `{s}`")))
    }
}

/// Triangle with feet at `left` and `right` and apex at `center`.
/// `left == center` or `center == right` gives a shoulder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangularMf {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl TriangularMf {
    pub fn new(left: f64, center: f64, right: f64) -> Result<Self> {
        if !(left <= center && center <= right) {
            return Err(Error::Config(format!(
                "triangle requires left <= center <= right, got ({left}, {center}, {right})"
            )));
        }
        Ok(Self { left, center, right })
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x < self.left || x > self.right {
            0.0
        } else if x == self.center {
            1.0
        } else if x < self.center {
            (x - self.left) / (self.center - self.left)
        } else {
            (self.right - x) / (self.right - self.center)
        }
    }
}

/// Seven triangles over `[-1, 1]`, each with feet at its neighbours' centres.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticPartition {
    mfs: [TriangularMf; LABEL_COUNT],
}

impl LinguisticPartition {
    /// Evenly spaced centres at `k/3`, `k = -3..=3`.
    pub fn standard() -> Self {
        let centers: [f64; LABEL_COUNT] = std::array::from_fn(|i| (i as f64 - 3.0) / 3.0);
        Self::from_centers(centers).expect("standard centres are valid")
    }

    /// Builds the partition from label centres. Centres must be strictly
    /// increasing, symmetric about zero, and span `[-1, 1]`.
    pub fn from_centers(centers: [f64; LABEL_COUNT]) -> Result<Self> {
        if centers.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!("centres must be strictly increasing: {centers:?}")));
        }
        if centers[3] != 0.0
            || (0..LABEL_COUNT).any(|i| centers[i] != -centers[LABEL_COUNT - 1 - i])
        {
            return Err(Error::Config(format!("centres must be symmetric about 0: {centers:?}")));
        }
        if centers[0] != -1.0 {
            return Err(Error::Config("outer centres must sit at -1 and 1".into()));
        }
        let mut mfs = [TriangularMf { left: 0.0, center: 0.0, right: 0.0 }; LABEL_COUNT];
        for i in 0..LABEL_COUNT {
            let left = if i == 0 { centers[0] } else { centers[i - 1] };
            let right = if i == LABEL_COUNT - 1 { centers[i] } else { centers[i + 1] };
            mfs[i] = TriangularMf::new(left, centers[i], right)?;
        }
        Ok(Self { mfs })
    }

    pub fn mfs(&self) -> &[TriangularMf; LABEL_COUNT] {
        &self.mfs
    }

    pub fn centers(&self) -> [f64; LABEL_COUNT] {
        std::array::from_fn(|i| self.mfs[i].center)
    }
}

/// Membership degree of `x` in each label of `partition`.
pub fn fuzzify(partition: &LinguisticPartition, x: f64) -> [f64; LABEL_COUNT] {
    std::array::from_fn(|i| partition.mfs[i].membership(x))
}

/// 7x7 rule table indexed by `(rate label, error label)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleBase {
    // by_rate[rate.index()][error.index()]
    by_rate: [[Label; LABEL_COUNT]; LABEL_COUNT],
}

impl RuleBase {
    /// Linear rule base. Rows run from rate = PL (first) down to rate = NL;
    /// columns run from error = NL to error = PL.
    pub const STANDARD_ROWS: [[&'static str; LABEL_COUNT]; LABEL_COUNT] = [
        ["ZR", "PS", "PM", "PL", "PL", "PL", "PL"],
        ["NS", "ZR", "PS", "PM", "PL", "PL", "PL"],
        ["NM", "NS", "ZR", "PS", "PM", "PL", "PL"],
        ["NL", "NM", "NS", "ZR", "PS", "PM", "PL"],
        ["NL", "NL", "NM", "NS", "ZR", "PS", "PM"],
        ["NL", "NL", "NL", "NM", "NS", "ZR", "PS"],
        ["NL", "NL", "NL", "NL", "NM", "NS", "ZR"],
    ];

    pub fn standard() -> Self {
        Self::from_rows(&Self::STANDARD_ROWS.map(|r| r.map(String::from)))
            .expect("standard rule table is valid")
    }

    /// Parses a table laid out like [`RuleBase::STANDARD_ROWS`].
    pub fn from_rows(rows: &[[String; LABEL_COUNT]; LABEL_COUNT]) -> Result<Self> {
        let mut by_rate = [[Label::ZR; LABEL_COUNT]; LABEL_COUNT];
        for (row, cells) in rows.iter().enumerate() {
            let rate = LABEL_COUNT - 1 - row;
            for (col, cell) in cells.iter().enumerate() {
                by_rate[rate][col] = cell.parse()?;
            }
        }
        Ok(Self { by_rate })
    }

    pub fn to_rows(&self) -> [[String; LABEL_COUNT]; LABEL_COUNT] {
        std::array::from_fn(|row| {
            std::array::from_fn(|col| self.by_rate[LABEL_COUNT - 1 - row][col].to_string())
        })
    }

    pub fn rule(&self, rate: Label, error: Label) -> Label {
        self.by_rate[rate.index()][error.index()]
    }
}

/// JSON description of a partition/rule-base variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyConfig {
    pub labels: Vec<String>,
    pub centers: Vec<f64>,
    /// Rows from rate = PL down to rate = NL; columns error = NL..PL.
    pub rules: Vec<Vec<String>>,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    FuzzyEngine::DEFAULT_RESOLUTION
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        Self {
            labels: Label::ALL.iter().map(|l| l.to_string()).collect(),
            centers: LinguisticPartition::standard().centers().to_vec(),
            rules: RuleBase::STANDARD_ROWS
                .iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
            resolution: FuzzyEngine::DEFAULT_RESOLUTION,
        }
    }
}

/// Mamdani engine. Immutable after construction; evaluation is pure.
#[derive(Debug, Clone)]
pub struct FuzzyEngine {
    error: LinguisticPartition,
    rate: LinguisticPartition,
    output: LinguisticPartition,
    rules: RuleBase,
    grid: Vec<f64>,
    // Output memberships sampled on the grid, label-major.
    out_table: Vec<f64>,
    // Half-open grid index range covering each output label's support.
    support: [(usize, usize); LABEL_COUNT],
}

impl FuzzyEngine {
    pub const DEFAULT_RESOLUTION: usize = 1001;

    pub fn new(
        error: LinguisticPartition,
        rate: LinguisticPartition,
        output: LinguisticPartition,
        rules: RuleBase,
        resolution: usize,
    ) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Config("defuzzification grid needs at least 2 points".into()));
        }
        let span = (resolution - 1) as f64;
        // Integer numerators keep grid[i] == -grid[n-1-i] exactly.
        let grid: Vec<f64> = (0..resolution)
            .map(|i| (2.0 * i as f64 - span) / span)
            .collect();
        let mut out_table = Vec::with_capacity(LABEL_COUNT * resolution);
        let mut support = [(0, 0); LABEL_COUNT];
        for (l, mf) in output.mfs.iter().enumerate() {
            let start = out_table.len();
            out_table.extend(grid.iter().map(|&x| mf.membership(x)));
            let row = &out_table[start..];
            let lo = row.iter().position(|&m| m > 0.0).unwrap_or(0);
            let hi = row.iter().rposition(|&m| m > 0.0).map_or(0, |i| i + 1);
            support[l] = (lo, hi);
        }
        Ok(Self {
            error,
            rate,
            output,
            rules,
            grid,
            out_table,
            support,
        })
    }

    pub fn from_config(cfg: &FuzzyConfig) -> Result<Self> {
        let expected: Vec<String> = Label::ALL.iter().map(|l| l.to_string()).collect();
        if cfg.labels != expected {
            return Err(Error::Config(format!(
                "labels must be exactly {expected:?}, got {:?}",
                cfg.labels
            )));
        }
        let centers: [f64; LABEL_COUNT] = cfg
            .centers
            .clone()
            .try_into()
            .map_err(|_| Error::Config(format!("expected {LABEL_COUNT} centres")))?;
        let rows: [[String; LABEL_COUNT]; LABEL_COUNT] = cfg
            .rules
            .iter()
            .map(|r| {
                r.clone()
                    .try_into()
                    .map_err(|_| Error::Config(format!("rule rows need {LABEL_COUNT} entries")))
            })
            .collect::<Result<Vec<_>>>()?
            .try_into()
            .map_err(|_| Error::Config(format!("rule table needs {LABEL_COUNT} rows")))?;
        let partition = LinguisticPartition::from_centers(centers)?;
        Self::new(
            partition.clone(),
            partition.clone(),
            partition,
            RuleBase::from_rows(&rows)?,
            cfg.resolution,
        )
    }

    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        Self::new(
            self.error.clone(),
            self.rate.clone(),
            self.output.clone(),
            self.rules.clone(),
            resolution,
        )
    }

    pub fn rules(&self) -> &RuleBase {
        &self.rules
    }

    pub fn output_partition(&self) -> &LinguisticPartition {
        &self.output
    }

    pub fn resolution(&self) -> usize {
        self.grid.len()
    }

    /// Clipping level of each output label after max-aggregation of all
    /// fired rules.
    pub fn aggregate(&self, error: f64, rate: f64) -> [f64; LABEL_COUNT] {
        let de = fuzzify(&self.error, error.clamp(-1.0, 1.0));
        let dr = fuzzify(&self.rate, rate.clamp(-1.0, 1.0));
        let mut levels = [0.0f64; LABEL_COUNT];
        for (i, &me) in de.iter().enumerate().filter(|(_, &m)| m > 0.0) {
            for (j, &mr) in dr.iter().enumerate().filter(|(_, &m)| m > 0.0) {
                let out = self.rules.by_rate[j][i].index();
                levels[out] = levels[out].max(me.min(mr));
            }
        }
        levels
    }

    /// Crisp output for scaled inputs; both inputs are clamped to `[-1, 1]`.
    pub fn evaluate(&self, error: f64, rate: f64) -> f64 {
        let levels = self.aggregate(error, rate);
        let mut active = [0usize; LABEL_COUNT];
        let mut n_active = 0;
        for l in 0..LABEL_COUNT {
            if levels[l] > 0.0 {
                active[n_active] = l;
                n_active += 1;
            }
        }
        if n_active == 0 {
            return 0.0;
        }
        let active = &active[..n_active];
        let lo = active.iter().map(|&l| self.support[l].0).min().unwrap_or(0);
        let hi = active.iter().map(|&l| self.support[l].1).max().unwrap_or(0);
        let n = self.grid.len();
        let mu = |i: usize| {
            active
                .iter()
                .map(|&l| levels[l].min(self.out_table[l * n + i]))
                .fold(0.0, f64::max)
        };
        // Mirrored grid points are summed in pairs so that mirrored rule
        // activations give exactly negated centroids.
        let (mut num, mut den) = (0.0, 0.0);
        let first = lo.min(n - hi);
        for i in first..n / 2 {
            let j = n - 1 - i;
            let (mi, mj) = (mu(i), mu(j));
            num += self.grid[j] * (mj - mi);
            den += mi + mj;
        }
        if n % 2 == 1 {
            den += mu(n / 2);
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

/// Engine with evenly spaced partitions, the linear rule base and the
/// default 1001-point defuzzification grid.
pub fn build_standard_engine() -> FuzzyEngine {
    let p = LinguisticPartition::standard();
    FuzzyEngine::new(
        p.clone(),
        p.clone(),
        p,
        RuleBase::standard(),
        FuzzyEngine::DEFAULT_RESOLUTION,
    )
    .expect("standard engine is valid")
}

/// Same as [`FuzzyEngine::evaluate`].
pub fn infer_and_defuzzify(engine: &FuzzyEngine, error: f64, rate: f64) -> f64 {
    engine.evaluate(error, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn rule_table_cells() {
        let r = RuleBase::standard();
        assert_eq!(r.rule(PL, NL), ZR);
        assert_eq!(r.rule(ZR, ZR), ZR);
        assert_eq!(r.rule(NM, PS), NS);
        assert_eq!(r.rule(NL, NL), NL);
        assert_eq!(r.rule(PL, PL), PL);
    }

    #[test]
    fn rule_table_structure() {
        let r = RuleBase::standard();
        for rate in Label::ALL {
            for err in Label::ALL {
                assert_eq!(r.rule(rate.negate(), err.negate()), r.rule(rate, err).negate());
                if rate.index() + err.index() == 6 {
                    assert_eq!(r.rule(rate, err), ZR);
                }
            }
        }
        for i in 0..LABEL_COUNT {
            for j in 1..LABEL_COUNT {
                let (a, b) = (Label::from_index(j - 1), Label::from_index(j));
                let at = Label::from_index(i);
                assert!(r.rule(at, a) <= r.rule(at, b));
                assert!(r.rule(a, at) <= r.rule(b, at));
            }
        }
    }

    #[test]
    fn rows_round_trip() {
        let r = RuleBase::standard();
        assert_eq!(RuleBase::from_rows(&r.to_rows()).unwrap(), r);
    }

    #[test]
    fn fuzzify_examples() {
        let p = LinguisticPartition::standard();
        assert_eq!(fuzzify(&p, 0.0), [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(fuzzify(&p, 1.0)[PL.index()], 1.0);
        let d = fuzzify(&p, 1.0 / 6.0);
        assert!((d[ZR.index()] - 0.5).abs() < 1e-12);
        assert!((d[PS.index()] - 0.5).abs() < 1e-12);
        assert_eq!(d.iter().filter(|&&m| m > 0.0).count(), 2);
    }

    #[test]
    fn partition_covers_universe() {
        let p = LinguisticPartition::standard();
        for i in 0..=2000 {
            let x = -1.0 + i as f64 / 1000.0;
            let d = fuzzify(&p, x);
            assert!(d.iter().sum::<f64>() > 0.0);
            assert!(d.iter().filter(|&&m| m > 0.0).count() <= 2);
        }
    }

    #[test]
    fn origin_maps_to_zero() {
        assert_eq!(build_standard_engine().evaluate(0.0, 0.0), 0.0);
    }

    #[test]
    fn saturated_inputs_give_pl_shoulder_centroid() {
        // Fine-grid centroid of the unclipped PL shoulder (2/3 .. 1, apex at 1).
        let n = 200_001;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let x = 2.0 / 3.0 + (1.0 / 3.0) * i as f64 / (n - 1) as f64;
            let mu = (x - 2.0 / 3.0) * 3.0;
            num += mu * x;
            den += mu;
        }
        let golden = num / den;
        assert!((golden - 8.0 / 9.0).abs() < 1e-5);
        let f = build_standard_engine().evaluate(1.0, 1.0);
        assert!((f - golden).abs() < 1e-3, "{f} vs {golden}");
    }

    #[test]
    fn out_of_range_inputs_are_clamped() {
        let e = build_standard_engine();
        assert_eq!(e.evaluate(5.0, -3.0), e.evaluate(1.0, -1.0));
    }

    #[test]
    fn config_round_trip_and_validation() {
        let cfg = FuzzyConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: FuzzyConfig = serde_json::from_str(&json).unwrap();
        let e = FuzzyEngine::from_config(&back).unwrap();
        let s = build_standard_engine();
        assert_eq!(e.evaluate(0.3, -0.7), s.evaluate(0.3, -0.7));

        let mut bad = FuzzyConfig::default();
        bad.rules[0][0] = "XX".into();
        assert!(FuzzyEngine::from_config(&bad).is_err());
        let mut bad = FuzzyConfig::default();
        bad.centers[1] = -0.5;
        assert!(FuzzyEngine::from_config(&bad).is_err());
        let mut bad = FuzzyConfig::default();
        bad.labels.pop();
        assert!(FuzzyEngine::from_config(&bad).is_err());
    }

    #[test]
    fn custom_partition_variant() {
        let mut cfg = FuzzyConfig::default();
        cfg.centers = vec![-1.0, -0.5, -0.2, 0.0, 0.2, 0.5, 1.0];
        let e = FuzzyEngine::from_config(&cfg).unwrap();
        let x = e.evaluate(0.35, 0.1);
        assert!((x + e.evaluate(-0.35, -0.1)).abs() < 1e-12);
        assert!(x > 0.0 && x <= 1.0);
    }
}
