//! Per-period stages. Each reads its inputs from the period directory (or the
//! configured input files), writes its tables there, and stamps a manifest.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use newsflow::corpus::{parse_reader, summarize, Corpus, ParseOutcome, TimeWindow};
use newsflow::ideology::{build_retweet_matrix, estimate, robustness_variant, AxisOptions, IdeologyOptions, Variant};
use newsflow::influence::{collective_influence_out, pagerank_weighted, rank_overlap, ranking_from_scores, CiRanking, RankEntry};
use newsflow::media_catalog::{
    average_leaning, category_volumes, modal_categories, prune_insignificant, sharing_kinds, user_category_links,
};
use newsflow::rng::derive_seed;
use newsflow::similarity::{build_similarity, influencer_user_counts, louvain, modularity, normalized_cut, subsample_se, SeparationMetric, SubsampleEstimate};
use newsflow::stats::{dip_test, quote_retweet_ratio, DipResult, DipTestConfig, QuoteRatioTable, Side};
use newsflow::{retweet_graph, MediaCategory, OutletCatalog, RetweetGraph};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{read_table, table_bytes, StageRun};
use crate::config::PipelineConfig;
use crate::error::CliError;

// Seed streams, one per randomized stage.
const STREAM_SIMILARITY: u64 = 1;
const STREAM_IDEOLOGY: u64 = 2;
const STREAM_STATS: u64 = 3;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const CATALOG_FILE: &str = "catalog.csv";
pub const USERS_FILE: &str = "users.csv";
pub const INFLUENCERS_FILE: &str = "influencers.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ingest,
    Classify,
    Graph,
    Rank,
    CompareRanks,
    Similarity,
    Ideology,
    Stats,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Classify,
        Stage::Graph,
        Stage::Rank,
        Stage::CompareRanks,
        Stage::Similarity,
        Stage::Ideology,
        Stage::Stats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Classify => "classify",
            Stage::Graph => "graph",
            Stage::Rank => "rank",
            Stage::CompareRanks => "compare-ranks",
            Stage::Similarity => "similarity",
            Stage::Ideology => "ideology",
            Stage::Stats => "stats",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

/// Run one stage for the named period (the first configured one by default).
pub fn run_stage(stage: Stage, cfg: &PipelineConfig, period: Option<&str>) -> Result<(), CliError> {
    cfg.validate()?;
    let p = cfg.period(period)?;
    match stage {
        Stage::Ingest => ingest(cfg, &p.name),
        Stage::Classify => classify(cfg, &p.name),
        Stage::Graph => graph(cfg, &p.name),
        Stage::Rank => rank(cfg, &p.name),
        Stage::CompareRanks => compare_ranks(cfg, &p.name),
        Stage::Similarity => similarity(cfg, &p.name),
        Stage::Ideology => ideology(cfg, &p.name),
        Stage::Stats => stats(cfg, &p.name),
    }
}

fn parse_corpus_bytes(bytes: &[u8], what: &str) -> Result<Corpus, CliError> {
    let out = parse_reader(bytes, TimeWindow::unbounded()).map_err(|e| CliError::input(what, e))?;
    if let Some(d) = out.diagnostics.first() {
        return Err(CliError::Input(format!("{what}: {d}")));
    }
    Ok(out.corpus)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestSummary {
    pub records: usize,
    pub malformed: usize,
    pub out_of_window: usize,
    pub summary: newsflow::corpus::CorpusSummary,
}

fn ingest(cfg: &PipelineConfig, name: &str) -> Result<(), CliError> {
    let p = cfg.period(Some(name))?;
    if p.corpus.is_empty() {
        return Err(CliError::Input(format!("period {name} lists no record files")));
    }
    let window = cfg.window(p)?;
    let mut run = StageRun::new(&cfg.period_dir(name), "ingest")?;
    let files: Vec<Vec<u8>> = p.corpus.iter().map(|f| run.read(f)).collect::<Result<_, _>>()?;
    let parts: Vec<ParseOutcome> = files
        .par_iter()
        .zip(&p.corpus)
        .map(|(bytes, path)| {
            let mut part = parse_reader(&bytes[..], window).map_err(|e| CliError::input(path.display(), e))?;
            for d in &mut part.diagnostics {
                d.file = Some(path.file_name().map(Into::into).unwrap_or_else(|| path.clone()));
            }
            Ok(part)
        })
        .collect::<Result<_, CliError>>()?;
    let mut merged = ParseOutcome::default();
    for part in parts {
        merged.corpus.records.extend(part.corpus.records);
        merged.diagnostics.extend(part.diagnostics);
        merged.out_of_window += part.out_of_window;
    }

    let mut jsonl = Vec::new();
    merged.corpus.write_jsonl(&mut jsonl).map_err(|e| CliError::input(CORPUS_FILE, e))?;
    run.write(CORPUS_FILE, &jsonl)?;
    let diagnostics: String = merged.diagnostics.iter().map(|d| format!("{d}\n")).collect();
    run.write("diagnostics.txt", diagnostics.as_bytes())?;
    run.write_json(
        "ingest.json",
        &IngestSummary {
            records: merged.corpus.len(),
            malformed: merged.diagnostics.len(),
            out_of_window: merged.out_of_window,
            summary: summarize(&merged.corpus, &cfg.official()),
        },
    )?;
    run.finish(
        cfg.seed,
        &json!({ "from": p.from, "to": p.to, "official_clients": cfg.official_clients }),
    )?;
    Ok(())
}

/// One row of `users.csv`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserRow {
    pub user_id: String,
    pub modal_category: Option<MediaCategory>,
    pub leaning: Option<f64>,
    pub links: u64,
}

fn classify(cfg: &PipelineConfig, name: &str) -> Result<(), CliError> {
    let p = cfg.period(Some(name))?;
    let catalog_path = cfg.catalog_for(p)?.to_path_buf();
    let mut run = StageRun::new(&cfg.period_dir(name), "classify")?;
    let corpus = parse_corpus_bytes(&run.read_local(CORPUS_FILE)?, CORPUS_FILE)?;
    let raw = run.read(&catalog_path)?;
    let full = OutletCatalog::read_csv("catalog", &raw[..]).map_err(|e| CliError::input(catalog_path.display(), e))?;
    let catalog = if cfg.classify.prune { prune_insignificant(&full) } else { full.clone() };

    let (links, unparseable) = user_category_links(&corpus, &catalog, &sharing_kinds());
    let modal = modal_categories(&links, cfg.seed);
    let rows: Vec<UserRow> = links
        .iter()
        .map(|(user, counts)| UserRow {
            user_id: user.clone(),
            modal_category: modal.get(user).copied(),
            leaning: average_leaning(counts, cfg.classify.min_tweets),
            links: counts.total(),
        })
        .collect();

    let mut cat_bytes = Vec::new();
    catalog.write_csv(&mut cat_bytes).map_err(|e| CliError::input(CATALOG_FILE, e))?;
    run.write(CATALOG_FILE, &cat_bytes)?;
    run.write(USERS_FILE, &table_bytes(&rows))?;
    run.write("volumes.csv", &table_bytes(&category_volumes(&links, &modal)))?;
    run.write_json(
        "classify.json",
        &json!({
            "outlets": full.len(),
            "outlets_kept": catalog.len(),
            "users_with_links": rows.len(),
            "users_with_leaning": rows.iter().filter(|r| r.leaning.is_some()).count(),
            "unparseable_urls": unparseable,
        }),
    )?;
    run.finish(
        cfg.seed,
        &json!({ "prune": cfg.classify.prune, "min_tweets": cfg.classify.min_tweets }),
    )?;
    Ok(())
}

fn graph_files(c: MediaCategory) -> (String, String) {
    (format!("graphs/{}.edges.csv", c.as_str()), format!("graphs/{}.nodes.csv", c.as_str()))
}

fn ranking_file(c: MediaCategory) -> String {
    format!("rankings/{}.csv", c.as_str())
}

fn graph(cfg: &PipelineConfig, name: &str) -> Result<(), CliError> {
    let kinds = cfg.kinds()?;
    let mut run = StageRun::new(&cfg.period_dir(name), "graph")?;
    let corpus = parse_corpus_bytes(&run.read_local(CORPUS_FILE)?, CORPUS_FILE)?;
    let cat_bytes = run.read_local(CATALOG_FILE)?;
    let catalog = OutletCatalog::read_csv("catalog", &cat_bytes[..]).map_err(|e| CliError::input(CATALOG_FILE, e))?;
    let graphs = retweet_graph::build_category_graphs(&corpus, &catalog, &kinds);
    let mut summaries = BTreeMap::new();
    for c in &cfg.categories {
        let g = &graphs[c];
        let (edges, nodes) = graph_files(*c);
        let mut e = Vec::new();
        g.write_edges_csv(&mut e).map_err(|err| CliError::input(&edges, err))?;
        run.write(&edges, &e)?;
        let mut n = Vec::new();
        g.write_nodes_csv(&mut n).map_err(|err| CliError::input(&nodes, err))?;
        run.write(&nodes, &n)?;
        summaries.insert(c.as_str(), retweet_graph::summarize(g));
    }
    run.write_json("graphs.json", &summaries)?;
    run.finish(cfg.seed, &json!({ "kinds": kinds.to_string(), "categories": cfg.categories }))?;
    Ok(())
}

fn read_graph(run: &mut StageRun, c: MediaCategory) -> Result<RetweetGraph, CliError> {
    let (edges, nodes) = graph_files(c);
    let e = run.read_local(&edges)?;
    let n = run.read_local(&nodes)?;
    RetweetGraph::read_csv(&e[..], &n[..]).map_err(|err| CliError::input(edges, err))
}

/// One row of a ranking table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub user_id: String,
    pub ci_value: u64,
    pub k_out: usize,
}

pub fn ranking_from_rows(rows: Vec<RankRow>, radius: usize) -> CiRanking {
    CiRanking {
        radius,
        entries: rows
            .into_iter()
            .map(|r| RankEntry {
                node: r.rank - 1,
                user_id: r.user_id,
                ci: r.ci_value,
                k_out: r.k_out,
            })
            .collect(),
    }
}

/// One row of `influencers.csv`: an influencer and the categories whose
/// top list it is in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfluencerRow {
    pub influencer_id: String,
    pub best_rank: usize,
    pub categories: String,
}

fn rank(cfg: &PipelineConfig, name: &str) -> Result<(), CliError> {
    let mut run = StageRun::new(&cfg.period_dir(name), "rank")?;
    let mut graphs = Vec::new();
    for c in &cfg.categories {
        graphs.push((*c, read_graph(&mut run, *c)?));
    }
    let mut selected: BTreeMap<String, (usize, Vec<&str>)> = BTreeMap::new();
    for (c, g) in &graphs {
        let ranking = if g.node_count() == 0 {
            CiRanking { radius: cfg.rank.radius, entries: Vec::new() }
        } else {
            collective_influence_out(g, cfg.rank.radius, cfg.rank.top_k)?
        };
        let rows: Vec<RankRow> = ranking
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| RankRow {
                rank: k + 1,
                user_id: e.user_id.clone(),
                ci_value: e.ci,
                k_out: e.k_out,
            })
            .collect();
        for r in rows.iter().filter(|r| r.k_out > 0) {
            let entry = selected.entry(r.user_id.clone()).or_insert((r.rank, Vec::new()));
            entry.0 = entry.0.min(r.rank);
            entry.1.push(c.as_str());
        }
        run.write(&ranking_file(*c), &table_bytes(&rows))?;
    }
    let influencers: Vec<InfluencerRow> = selected
        .into_iter()
        .map(|(id, (best, cats))| InfluencerRow {
            influencer_id: id,
            best_rank: best,
            categories: cats.join(";"),
        })
        .collect();
    if influencers.is_empty() {
        return Err(CliError::Input(format!("period {name}: no category network has an influencer")));
    }
    run.write(INFLUENCERS_FILE, &table_bytes(&influencers))?;
    run.finish(
        cfg.seed,
        &json!({ "radius": cfg.rank.radius, "top_k": cfg.rank.top_k, "categories": cfg.categories }),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CompareRow {
    category: MediaCategory,
    rbo: Option<f64>,
    jaccard: Option<f64>,
    p: f64,
    depth: usize,
}

#[derive(Debug, Clone, Serialize)]
struct PageRankRow<'a> {
    rank: usize,
    user_id: &'a str,
    score: f64,
}

fn compare_ranks(cfg: &PipelineConfig, name: &str) -> Result<(), CliError> {
    let mut run = StageRun::new(&cfg.period_dir(name), "compare-ranks")?;
    let mut rows = Vec::new();
    for c in &cfg.categories {
        let g = read_graph(&mut run, *c)?;
        let ci: Vec<RankRow> = read_table(&run.read_local(&ranking_file(*c))?, &ranking_file(*c))?;
        let scores = pagerank_weighted(&g, cfg.rank.damping, cfg.rank.pagerank_tolerance, cfg.rank.pagerank_max_iterations)?;
        let order = ranking_from_scores(&scores);
        let pr: Vec<PageRankRow> = order
            .iter()
            .take(cfg.rank.top_k)
            .enumerate()
            .map(|(k, &i)| PageRankRow {
                rank: k + 1,
                user_id: g.id(i),
                score: scores[i],
            })
            .collect();
        run.write(&format!("pagerank/{}.csv", c.as_str()), &table_bytes(&pr))?;
        let ci_ids: Vec<&str> = ci.iter().map(|r| r.user_id.as_str()).collect();
        let pr_ids: Vec<&str> = pr.iter().map(|r| r.user_id).collect();
        let (rbo, jaccard) = if ci_ids.is_empty() || pr_ids.is_empty() {
            (None, None)
        } else {
            let cmp = rank_overlap(&ci_ids, &pr_ids, cfg.rank.rbo_p, cfg.rank.top_k)?;
            (Some(cmp.rbo), Some(cmp.jaccard))
        };
        rows.push(CompareRow {
            category: *c,
            rbo,
            jaccard,
            p: cfg.rank.rbo_p,
            depth: cfg.rank.top_k,
        });
    }
    run.write("compare_ranks.csv", &table_bytes(&rows))?;
    run.finish(
        cfg.seed,
        &json!({
            "damping": cfg.rank.damping,
            "rbo_p": cfg.rank.rbo_p,
            "depth": cfg.rank.top_k,
            "tolerance": cfg.rank.pagerank_tolerance,
            "max_iterations": cfg.rank.pagerank_max_iterations,
        }),
    )?;
    Ok(())
}

fn read_influencers(run: &mut StageRun) -> Result<Vec<InfluencerRow>, CliError> {
    read_table(&run.read_local(INFLUENCERS_FILE)?, INFLUENCERS_FILE)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilaritySummary {
    pub kind: String,
    pub influencers: usize,
    pub excluded: Vec<String>,
    pub users: usize,
    pub communities: usize,
    pub modularity: f64,
    pub normalized_cut: f64,
    pub modularity_subsample: Option<SubsampleEstimate>,
    pub normalized_cut_subsample: Option<SubsampleEstimate>,
}

fn similarity(cfg: &PipelineConfig, name: &str) -> Result<(), CliError> {
    let kinds = cfg.similarity_kinds()?;
    let mut run = StageRun::new(&cfg.period_dir(name), "similarity")?;
    let corpus = parse_corpus_bytes(&run.read_local(CORPUS_FILE)?, CORPUS_FILE)?;
    let influencers: HashSet<String> = read_influencers(&mut run)?.into_iter().map(|r| r.influencer_id).collect();
    let official = cfg.official();
    let counts = influencer_user_counts(&corpus, &influencers, &kinds, cfg.similarity.official_only.then_some(&official));
    let net = build_similarity(&counts)?;
    let seed = derive_seed(cfg.seed, STREAM_SIMILARITY);
    let part = louvain(&net, seed);
    let q = modularity(&net, &part)?;
    let cut = normalized_cut(&net, &part)?;
    // subsamples need at least two influencers each
    let subsample = |metric, stream| -> Result<Option<SubsampleEstimate>, CliError> {
        if (cfg.similarity.fraction * net.len() as f64).ceil() < 2.0 {
            return Ok(None);
        }
        Ok(Some(subsample_se(&net, metric, cfg.similarity.fraction, cfg.similarity.reps, derive_seed(seed, stream))?))
    };
    let summary = SimilaritySummary {
        kind: cfg.similarity.kind.clone(),
        influencers: net.len(),
        excluded: net.excluded.clone(),
        users: net.user_dimension,
        communities: part.community_count(),
        modularity: q,
        normalized_cut: cut,
        modularity_subsample: subsample(SeparationMetric::Modularity, 1)?,
        normalized_cut_subsample: subsample(SeparationMetric::NormalizedCut, 2)?,
    };

    let mut sim = Vec::new();
    net.write_upper_csv(&mut sim)?;
    run.write("similarity.csv", &sim)?;
    let mut parts = Vec::new();
    part.write_csv(&net, &mut parts)?;
    run.write("partition.csv", &parts)?;
    run.write_json("similarity.json", &summary)?;
    run.finish(
        cfg.seed,
        &json!({
            "kind": cfg.similarity.kind,
            "fraction": cfg.similarity.fraction,
            "reps": cfg.similarity.reps,
            "official_only": cfg.similarity.official_only,
        }),
    )?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdeologySummary {
    pub variant: Variant,
    pub min_distinct: usize,
    pub official_only: bool,
    pub users: usize,
    pub influencers: usize,
    pub dropped_users: usize,
    pub dropped_influencers: Vec<String>,
    pub skipped_unofficial: u64,
    pub skipped_self: u64,
    pub orientation: newsflow::ideology::Orientation,
    pub singular_value: f64,
    pub iterations: usize,
}

fn ideology(cfg: &PipelineConfig, name: &str) -> Result<(), CliError> {
    let variant = cfg.variant()?;
    let mut run = StageRun::new(&cfg.period_dir(name), "ideology")?;
    let corpus = parse_corpus_bytes(&run.read_local(CORPUS_FILE)?, CORPUS_FILE)?;
    let influencers: BTreeSet<String> = read_influencers(&mut run)?.into_iter().map(|r| r.influencer_id).collect();
    let leanings: Option<HashMap<String, f64>> = if cfg.ideology.orientation_check {
        let users: Vec<UserRow> = read_table(&run.read_local(USERS_FILE)?, USERS_FILE)?;
        Some(users.into_iter().filter_map(|u| u.leaning.map(|l| (u.user_id, l))).collect())
    } else {
        None
    };
    let official = cfg.official();
    let (base, diag) = build_retweet_matrix(
        &corpus,
        &influencers,
        cfg.ideology.min_distinct,
        cfg.ideology.official_only.then_some(&official),
    )?;
    let mat = match variant {
        Variant::Baseline => base,
        v => robustness_variant(&base, v, cfg.ideology.min_distinct)?,
    };
    let options = IdeologyOptions {
        weighted_median: cfg.ideology.weighted_median,
        axis: AxisOptions {
            tolerance: cfg.ideology.tolerance,
            max_iterations: cfg.ideology.max_iterations,
            seed: derive_seed(cfg.seed, STREAM_IDEOLOGY),
            ..AxisOptions::default()
        },
    };
    let scale = estimate(&mat, leanings.as_ref(), &options)?;

    let mut users = Vec::new();
    scale.write_user_csv(&mut users)?;
    run.write("user_positions.csv", &users)?;
    let mut infl = Vec::new();
    scale.write_influencer_csv(&mut infl)?;
    run.write("influencer_positions.csv", &infl)?;
    run.write_json(
        "ideology.json",
        &IdeologySummary {
            variant,
            min_distinct: cfg.ideology.min_distinct,
            official_only: cfg.ideology.official_only,
            users: mat.n_rows(),
            influencers: mat.n_cols(),
            dropped_users: diag.dropped_users,
            dropped_influencers: diag.dropped_influencers,
            skipped_unofficial: diag.skipped_unofficial,
            skipped_self: diag.skipped_self,
            orientation: scale.orientation,
            singular_value: scale.singular_value,
            iterations: scale.iterations,
        },
    )?;
    run.finish(cfg.seed, &cfg.ideology)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PositionRow {
    #[serde(alias = "influencer_id")]
    user_id: String,
    position: f64,
}

/// A dip test as stored on disk; an interval is absent when no bootstrap ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipSummary {
    pub statistic: f64,
    pub p_value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub level: f64,
    pub n: usize,
    pub b_boot: usize,
    pub b_null: usize,
    pub seed: u64,
    pub text: String,
}

impl From<&DipResult> for DipSummary {
    fn from(d: &DipResult) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        Self {
            statistic: d.statistic,
            p_value: d.p_value,
            ci_low: finite(d.ci_low),
            ci_high: finite(d.ci_high),
            level: d.level,
            n: d.n,
            b_boot: d.b_boot,
            b_null: d.b_null,
            seed: d.seed,
            text: d.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuoteRatios {
    pub quotes: [[u64; 2]; 2],
    pub retweets: [[u64; 2]; 2],
    pub left_users: Option<f64>,
    pub right_users: Option<f64>,
    pub left_on_left: Option<f64>,
    pub left_on_right: Option<f64>,
    pub right_on_left: Option<f64>,
    pub right_on_right: Option<f64>,
}

impl From<&QuoteRatioTable> for QuoteRatios {
    fn from(t: &QuoteRatioTable) -> Self {
        Self {
            quotes: t.quotes,
            retweets: t.retweets,
            left_users: t.user_side_ratio(Side::Left),
            right_users: t.user_side_ratio(Side::Right),
            left_on_left: t.ratio(Side::Left, Side::Left),
            left_on_right: t.ratio(Side::Left, Side::Right),
            right_on_left: t.ratio(Side::Right, Side::Left),
            right_on_right: t.ratio(Side::Right, Side::Right),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsSummary {
    pub user_dip: DipSummary,
    pub quote_retweet: QuoteRatios,
}

fn stats(cfg: &PipelineConfig, name: &str) -> Result<(), CliError> {
    let mut run = StageRun::new(&cfg.period_dir(name), "stats")?;
    let users: Vec<PositionRow> = read_table(&run.read_local("user_positions.csv")?, "user_positions.csv")?;
    let infl: Vec<PositionRow> = read_table(&run.read_local("influencer_positions.csv")?, "influencer_positions.csv")?;
    let corpus = parse_corpus_bytes(&run.read_local(CORPUS_FILE)?, CORPUS_FILE)?;
    let sample: Vec<f64> = users.iter().map(|u| u.position).collect();
    let dip = dip_test(
        &sample,
        &DipTestConfig {
            b_null: cfg.stats.b_null,
            b_boot: cfg.stats.b_boot,
            level: cfg.stats.level,
            seed: derive_seed(cfg.seed, STREAM_STATS),
        },
    )?;
    let user_map: HashMap<String, f64> = users.into_iter().map(|u| (u.user_id, u.position)).collect();
    let infl_map: HashMap<String, f64> = infl.into_iter().map(|u| (u.user_id, u.position)).collect();
    let table = quote_retweet_ratio(&corpus, &user_map, &infl_map);
    let summary = StatsSummary {
        user_dip: DipSummary::from(&dip),
        quote_retweet: QuoteRatios::from(&table),
    };
    run.write_json("stats.json", &summary)?;
    let fmt_ratio = |r: Option<f64>| r.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    let text = format!(
        "user positions: {dip}\nquotes per retweet: left users {}, right users {}\n",
        fmt_ratio(summary.quote_retweet.left_users),
        fmt_ratio(summary.quote_retweet.right_users),
    );
    run.write("stats.txt", text.as_bytes())?;
    run.finish(cfg.seed, &cfg.stats)?;
    Ok(())
}

/// The rankings of every configured category in a period directory.
pub fn read_rankings(
    run: &mut StageRun,
    dir_name: &str,
    cfg: &PipelineConfig,
) -> Result<BTreeMap<MediaCategory, CiRanking>, CliError> {
    let mut out = BTreeMap::new();
    for c in &cfg.categories {
        let rel = format!("{dir_name}/{}", ranking_file(*c));
        let path = cfg.paths.output.join(&rel);
        let rows: Vec<RankRow> = read_table(&run.read(&path)?, &rel)?;
        out.insert(*c, ranking_from_rows(rows, cfg.rank.radius));
    }
    Ok(out)
}
