//! Pipeline configuration: one TOML file, overridable from the command line.

use std::path::{Path, PathBuf};

use newsflow::corpus::{KindSet, OfficialClients, TimeWindow, DEFAULT_OFFICIAL_CLIENTS};
use newsflow::ideology::Variant;
use newsflow::synth::SynthConfig;
use newsflow::MediaCategory;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub periods: Vec<PeriodConfig>,
    pub categories: Vec<MediaCategory>,
    pub official_clients: Vec<String>,
    pub classify: ClassifyConfig,
    pub graph: GraphConfig,
    pub rank: RankConfig,
    pub similarity: SimilarityConfig,
    pub ideology: IdeologyConfig,
    pub stats: StatsConfig,
    pub report: ReportConfig,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub catalog: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub output: PathBuf,
}

/// One observation period: its record files, time window and optional
/// period-specific catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodConfig {
    pub name: String,
    #[serde(default)]
    pub corpus: Vec<PathBuf>,
    #[serde(default)]
    pub from: Option<f64>,
    #[serde(default)]
    pub to: Option<f64>,
    #[serde(default)]
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub prune: bool,
    /// Classified links a user needs before getting an average leaning.
    pub min_tweets: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub kinds: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankConfig {
    pub radius: usize,
    pub top_k: usize,
    pub damping: f64,
    pub rbo_p: f64,
    pub pagerank_tolerance: f64,
    pub pagerank_max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    /// `retweet` or `quote`.
    pub kind: String,
    pub fraction: f64,
    pub reps: usize,
    pub official_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdeologyConfig {
    pub min_distinct: usize,
    pub variant: String,
    /// Orient the axis by correlation with the users' average leaning.
    pub orientation_check: bool,
    pub weighted_median: bool,
    pub official_only: bool,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub b_null: usize,
    pub b_boot: usize,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Depth of the rank-shift and type-share tables.
    pub top_n: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            paths: Paths::default(),
            periods: Vec::new(),
            categories: MediaCategory::ALL.to_vec(),
            official_clients: DEFAULT_OFFICIAL_CLIENTS.iter().map(|s| s.to_string()).collect(),
            classify: ClassifyConfig::default(),
            graph: GraphConfig::default(),
            rank: RankConfig::default(),
            similarity: SimilarityConfig::default(),
            ideology: IdeologyConfig::default(),
            stats: StatsConfig::default(),
            report: ReportConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            catalog: None,
            labels: None,
            output: PathBuf::from("out"),
        }
    }
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self { prune: true, min_tweets: 3 }
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { kinds: "retweet".into() }
    }
}

impl Default for RankConfig {
    fn default() -> Self {
        Self {
            radius: 2,
            top_k: 100,
            damping: 0.85,
            rbo_p: 0.98,
            pagerank_tolerance: 1e-12,
            pagerank_max_iterations: 10_000,
        }
    }
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            kind: "retweet".into(),
            fraction: 0.5,
            reps: 100,
            official_only: true,
        }
    }
}

impl Default for IdeologyConfig {
    fn default() -> Self {
        Self {
            min_distinct: 3,
            variant: "baseline".into(),
            orientation_check: true,
            weighted_median: true,
            official_only: true,
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            b_null: 9999,
            b_boot: 1000,
            level: 0.95,
        }
    }
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { top_n: 10 }
    }
}

impl PipelineConfig {
    /// Read a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|_| CliError::MissingArtifact(path.to_path_buf()))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.paths.output);
        self.paths.catalog.as_mut().map(fix);
        self.paths.labels.as_mut().map(fix);
        for period in &mut self.periods {
            period.corpus.iter_mut().for_each(fix);
            period.catalog.as_mut().map(fix);
        }
    }

    /// Check parameter ranges and parse the string-valued options.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        if self.categories.is_empty() {
            return bad("category list is empty".into());
        }
        let mut names: Vec<&str> = self.periods.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("period names must be unique".into());
        }
        for p in &self.periods {
            if p.name.is_empty() || p.name.contains(['/', '\\']) || p.name == REPORT_DIR {
                return bad(format!("invalid period name {:?}", p.name));
            }
            self.window(p)?;
        }
        self.kinds()?;
        self.similarity_kinds()?;
        self.variant()?;
        if self.rank.radius == 0 || self.rank.top_k == 0 {
            return bad("rank radius and top_k must be positive".into());
        }
        if !(self.rank.damping > 0.0 && self.rank.damping < 1.0) {
            return bad(format!("damping must lie in (0, 1), got {}", self.rank.damping));
        }
        if !(self.rank.rbo_p > 0.0 && self.rank.rbo_p < 1.0) {
            return bad(format!("rbo_p must lie in (0, 1), got {}", self.rank.rbo_p));
        }
        if !(self.similarity.fraction > 0.0 && self.similarity.fraction < 1.0) {
            return bad(format!("similarity fraction must lie in (0, 1), got {}", self.similarity.fraction));
        }
        if self.similarity.reps < 2 {
            return bad("similarity reps must be at least 2".into());
        }
        if self.ideology.min_distinct == 0 {
            return bad("min_distinct must be at least 1".into());
        }
        if self.classify.min_tweets == 0 {
            return bad("min_tweets must be at least 1".into());
        }
        if !(self.stats.level > 0.0 && self.stats.level < 1.0) {
            return bad(format!("confidence level must lie in (0, 1), got {}", self.stats.level));
        }
        if self.stats.b_null < 100 {
            return bad(format!("b_null must be at least 100, got {}", self.stats.b_null));
        }
        if self.stats.b_boot != 0 && self.stats.b_boot < 100 {
            return bad(format!("b_boot must be 0 (no interval) or at least 100, got {}", self.stats.b_boot));
        }
        if self.report.top_n == 0 {
            return bad("report top_n must be positive".into());
        }
        self.synth.validate().map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn period(&self, name: Option<&str>) -> Result<&PeriodConfig, CliError> {
        match name {
            Some(n) => self
                .periods
                .iter()
                .find(|p| p.name == n)
                .ok_or_else(|| CliError::Input(format!("no period named {n:?} in the config"))),
            None => self
                .periods
                .first()
                .ok_or_else(|| CliError::Input("config defines no period".into())),
        }
    }

    pub fn period_dir(&self, name: &str) -> PathBuf {
        self.paths.output.join(name)
    }

    pub fn comparison_dir(&self) -> PathBuf {
        self.paths.output.join(REPORT_DIR)
    }

    pub fn window(&self, p: &PeriodConfig) -> Result<TimeWindow, CliError> {
        TimeWindow::new(p.from.unwrap_or(f64::NEG_INFINITY), p.to.unwrap_or(f64::INFINITY))
            .map_err(|e| CliError::Input(format!("period {}: {e}", p.name)))
    }

    pub fn catalog_for<'a>(&'a self, p: &'a PeriodConfig) -> Result<&'a Path, CliError> {
        p.catalog
            .as_deref()
            .or(self.paths.catalog.as_deref())
            .ok_or_else(|| CliError::Input(format!("no catalog configured for period {}", p.name)))
    }

    pub fn official(&self) -> OfficialClients {
        OfficialClients::new(self.official_clients.iter().cloned())
    }

    pub fn kinds(&self) -> Result<KindSet, CliError> {
        self.graph.kinds.parse().map_err(|e| CliError::Input(format!("graph kinds: {e}")))
    }

    pub fn similarity_kinds(&self) -> Result<KindSet, CliError> {
        match self.similarity.kind.as_str() {
            "retweet" => Ok(KindSet::retweets()),
            "quote" => Ok(KindSet::only(newsflow::InteractionKind::Quote)),
            other => Err(CliError::Input(format!("similarity kind must be retweet or quote, got {other:?}"))),
        }
    }

    pub fn variant(&self) -> Result<Variant, CliError> {
        self.ideology.variant.parse().map_err(CliError::Input)
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub period: Option<String>,
    pub input: Vec<PathBuf>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub official_clients: Option<Vec<String>>,
    pub catalog: Option<PathBuf>,
    pub prune: Option<bool>,
    pub labels: Option<PathBuf>,
    pub categories: Option<Vec<MediaCategory>>,
    pub kinds: Option<String>,
    pub radius: Option<usize>,
    pub top_k: Option<usize>,
    pub damping: Option<f64>,
    pub rbo_p: Option<f64>,
    pub kind: Option<String>,
    pub fraction: Option<f64>,
    pub reps: Option<usize>,
    pub min_distinct: Option<usize>,
    pub variant: Option<String>,
    pub orientation_check: Option<bool>,
    pub b_null: Option<usize>,
    pub b_boot: Option<usize>,
    pub top_n: Option<usize>,
    pub epsilon: Option<f64>,
    pub users: Option<usize>,
    pub influencers: Option<usize>,
}

/// Directory, under the output root, of the cross-period stages.
pub const REPORT_DIR: &str = "report";

/// Name of the period used when the config defines none.
pub const DEFAULT_PERIOD: &str = "main";

impl PipelineConfig {
    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        set(&mut self.paths.output, &o.output);
        set(&mut self.seed, &o.seed);
        if o.catalog.is_some() {
            self.paths.catalog = o.catalog.clone();
        }
        if o.labels.is_some() {
            self.paths.labels = o.labels.clone();
        }
        set(&mut self.official_clients, &o.official_clients);
        set(&mut self.classify.prune, &o.prune);
        set(&mut self.categories, &o.categories);
        set(&mut self.graph.kinds, &o.kinds);
        set(&mut self.rank.radius, &o.radius);
        set(&mut self.rank.top_k, &o.top_k);
        set(&mut self.rank.damping, &o.damping);
        set(&mut self.rank.rbo_p, &o.rbo_p);
        set(&mut self.similarity.kind, &o.kind);
        set(&mut self.similarity.fraction, &o.fraction);
        set(&mut self.similarity.reps, &o.reps);
        set(&mut self.ideology.min_distinct, &o.min_distinct);
        set(&mut self.ideology.variant, &o.variant);
        set(&mut self.ideology.orientation_check, &o.orientation_check);
        set(&mut self.stats.b_null, &o.b_null);
        set(&mut self.stats.b_boot, &o.b_boot);
        set(&mut self.report.top_n, &o.top_n);
        set(&mut self.synth.epsilon, &o.epsilon);
        set(&mut self.synth.n_users, &o.users);
        set(&mut self.synth.n_influencers, &o.influencers);
        if let Some(s) = o.seed {
            self.synth.seed = s;
        }

        let wants_period = !o.input.is_empty() || o.from.is_some() || o.to.is_some();
        if self.periods.is_empty() && (wants_period || o.period.is_none()) {
            self.periods.push(PeriodConfig {
                name: o.period.clone().unwrap_or_else(|| DEFAULT_PERIOD.to_string()),
                corpus: Vec::new(),
                from: None,
                to: None,
                catalog: None,
            });
        }
        if self.periods.is_empty() {
            if let Some(name) = &o.period {
                self.periods.push(PeriodConfig {
                    name: name.clone(),
                    corpus: Vec::new(),
                    from: None,
                    to: None,
                    catalog: None,
                });
            }
        }
        let target = match &o.period {
            Some(name) => self.periods.iter_mut().find(|p| &p.name == name),
            None => self.periods.first_mut(),
        };
        if let Some(p) = target {
            if !o.input.is_empty() {
                p.corpus = o.input.clone();
            }
            if o.from.is_some() {
                p.from = o.from;
            }
            if o.to.is_some() {
                p.to = o.to;
            }
        }
    }

    /// Stable digest of every setting, used to stamp manifests.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
