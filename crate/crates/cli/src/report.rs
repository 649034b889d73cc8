//! Cross-period stages: rank shifts, type shares and category flows, and the
//! final comparison report.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use newsflow::influence::CiRanking;
use newsflow::media_catalog::category_flow;
use newsflow::shifts::{new_entrant_fraction, rank_shifts, read_labels, type_shares, write_shifts_csv, write_type_shares_csv, TypeShare};
use newsflow::MediaCategory;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{read_table, StageRun};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::stages::{read_rankings, IngestSummary, InfluencerRow, SimilaritySummary, StatsSummary, UserRow, INFLUENCERS_FILE, USERS_FILE};

/// The periods compared: the first two configured, or the only one.
fn compared(cfg: &PipelineConfig) -> Result<Vec<String>, CliError> {
    match cfg.periods.len() {
        0 => Err(CliError::Input("config defines no period".into())),
        1 => Ok(vec![cfg.periods[0].name.clone()]),
        _ => Ok(vec![cfg.periods[0].name.clone(), cfg.periods[1].name.clone()]),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(run: &mut StageRun, cfg: &PipelineConfig, rel: &str) -> Result<T, CliError> {
    let bytes = run.read(&cfg.paths.output.join(rel))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::input(rel, e))
}

fn read_modal(run: &mut StageRun, cfg: &PipelineConfig, period: &str) -> Result<HashMap<String, MediaCategory>, CliError> {
    let rel = format!("{period}/{USERS_FILE}");
    let rows: Vec<UserRow> = read_table(&run.read(&cfg.paths.output.join(&rel))?, &rel)?;
    Ok(rows.into_iter().filter_map(|u| u.modal_category.map(|c| (u.user_id, c))).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftsSummary {
    pub periods: Vec<String>,
    pub influencers_in_top: usize,
    pub new_entrant_fraction: Option<f64>,
    pub common_users: u64,
    pub labeled: bool,
    pub warnings: Vec<String>,
}

/// Compare the first two periods' rankings and user categories.
pub fn run_shifts(cfg: &PipelineConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let names = compared(cfg)?;
    if names.len() < 2 {
        return Err(CliError::Input("shifts needs two periods".into()));
    }
    let mut run = StageRun::new(&cfg.comparison_dir(), "shifts")?;
    let ra = read_rankings(&mut run, &names[0], cfg)?;
    let rb = read_rankings(&mut run, &names[1], cfg)?;
    let top_n = cfg.report.top_n;
    let shifts = rank_shifts(&ra, &rb, top_n).map_err(|e| CliError::input("shifts", e))?;
    let mut bytes = Vec::new();
    write_shifts_csv(&shifts, &mut bytes).map_err(|e| CliError::input("shifts.csv", e))?;
    run.write("shifts.csv", &bytes)?;

    let mut warnings = Vec::new();
    let labeled = match &cfg.paths.labels {
        Some(path) => {
            let raw = run.read(path)?;
            let labels = read_labels(&raw[..]).map_err(|e| CliError::input(path.display(), e))?;
            for (name, rankings) in names.iter().zip([&ra, &rb]) {
                let (shares, unlabeled) = type_shares(&labels, rankings, top_n);
                warnings.extend(unlabeled.into_iter().map(|w| format!("{name}: {w}")));
                let mut bytes = Vec::new();
                write_type_shares_csv(&shares, &mut bytes).map_err(|e| CliError::input("type shares", e))?;
                run.write(&format!("type_shares_{name}.csv"), &bytes)?;
            }
            true
        }
        None => false,
    };

    let flow = category_flow(&read_modal(&mut run, cfg, &names[0])?, &read_modal(&mut run, cfg, &names[1])?);
    run.write("category_flow.csv", &flow_bytes(&flow))?;
    run.write_json(
        "shifts.json",
        &ShiftsSummary {
            periods: names.clone(),
            influencers_in_top: shifts.len(),
            new_entrant_fraction: new_entrant_fraction(&shifts),
            common_users: flow.iter().flatten().sum(),
            labeled,
            warnings,
        },
    )?;
    run.finish(cfg.seed, &json!({ "periods": names, "top_n": top_n, "categories": cfg.categories }))?;
    Ok(())
}

fn flow_bytes(flow: &[[u64; 8]; 8]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["from".to_string()];
    header.extend(MediaCategory::ALL.iter().map(|c| c.as_str().to_string()));
    w.write_record(&header).expect("in-memory writer");
    for (c, row) in MediaCategory::ALL.iter().zip(flow) {
        let mut rec = vec![c.as_str().to_string()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec).expect("in-memory writer");
    }
    w.into_inner().expect("in-memory writer")
}

fn read_flow(bytes: &[u8]) -> Result<Vec<Vec<u64>>, CliError> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::input("category_flow.csv", e))?;
        let row: Result<Vec<u64>, _> = rec.iter().skip(1).map(str::parse).collect();
        out.push(row.map_err(|e| CliError::input("category_flow.csv", e))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodReport {
    pub name: String,
    pub records: usize,
    pub dip: crate::stages::DipSummary,
    pub modularity: f64,
    pub modularity_se: Option<f64>,
    pub normalized_cut: f64,
    pub normalized_cut_se: Option<f64>,
    pub communities: usize,
    pub quote_retweet: crate::stages::QuoteRatios,
    pub influencers: usize,
    /// Top influencers per category as (user_id, CI value).
    pub top_influencers: BTreeMap<MediaCategory, Vec<(String, u64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increase,
    Decrease,
    Unchanged,
    Undefined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Change {
    pub metric: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub delta: Option<f64>,
    pub direction: Direction,
}

impl Change {
    fn new(metric: &str, a: Option<f64>, b: Option<f64>) -> Self {
        let delta = a.zip(b).map(|(a, b)| b - a);
        let direction = match delta {
            None => Direction::Undefined,
            Some(d) if d > 0.0 => Direction::Increase,
            Some(d) if d < 0.0 => Direction::Decrease,
            Some(_) => Direction::Unchanged,
        };
        Self {
            metric: metric.to_string(),
            a,
            b,
            delta,
            direction,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub changes: Vec<Change>,
    pub influencers_shared: usize,
    pub new_entrant_fraction: Option<f64>,
    pub rank_shifts: Vec<newsflow::shifts::RankShift>,
    pub type_shares: BTreeMap<String, Vec<TypeShareRow>>,
    pub category_flow: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeShareRow {
    pub category: MediaCategory,
    pub media: f64,
    pub political: f64,
    pub independent: f64,
    pub other: f64,
    pub n: usize,
}

impl From<&TypeShare> for TypeShareRow {
    fn from(s: &TypeShare) -> Self {
        let [media, political, independent, other] = s.shares();
        Self {
            category: s.category,
            media,
            political,
            independent,
            other,
            n: s.total(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub periods: Vec<PeriodReport>,
    pub comparison: Option<Comparison>,
    pub warnings: Vec<String>,
}

fn period_report(run: &mut StageRun, cfg: &PipelineConfig, name: &str) -> Result<(PeriodReport, BTreeSet<String>, BTreeMap<MediaCategory, CiRanking>), CliError> {
    let ingest: IngestSummary = read_json(run, cfg, &format!("{name}/ingest.json"))?;
    if ingest.records == 0 {
        return Err(CliError::Input(format!("period {name} is empty")));
    }
    let sim: SimilaritySummary = read_json(run, cfg, &format!("{name}/similarity.json"))?;
    let stats: StatsSummary = read_json(run, cfg, &format!("{name}/stats.json"))?;
    let rel = format!("{name}/{INFLUENCERS_FILE}");
    let infl: Vec<InfluencerRow> = read_table(&run.read(&cfg.paths.output.join(&rel))?, &rel)?;
    let rankings = read_rankings(run, name, cfg)?;
    let top_influencers = rankings
        .iter()
        .map(|(c, r)| (*c, r.entries.iter().take(cfg.report.top_n).map(|e| (e.user_id.clone(), e.ci)).collect()))
        .collect();
    let report = PeriodReport {
        name: name.to_string(),
        records: ingest.records,
        dip: stats.user_dip,
        modularity: sim.modularity,
        modularity_se: sim.modularity_subsample.map(|s| s.standard_error),
        normalized_cut: sim.normalized_cut,
        normalized_cut_se: sim.normalized_cut_subsample.map(|s| s.standard_error),
        communities: sim.communities,
        quote_retweet: stats.quote_retweet,
        influencers: infl.len(),
        top_influencers,
    };
    Ok((report, infl.into_iter().map(|r| r.influencer_id).collect(), rankings))
}

/// Build the report for the compared periods, plus the shifts tables when
/// there are two.
pub fn run_report(cfg: &PipelineConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let names = compared(cfg)?;
    let mut run = StageRun::new(&cfg.comparison_dir(), "report")?;
    let mut periods = Vec::new();
    let mut universes = Vec::new();
    for name in &names {
        let (p, u, _) = period_report(&mut run, cfg, name)?;
        periods.push(p);
        universes.push(u);
    }
    let mut warnings = Vec::new();
    let comparison = if periods.len() == 2 {
        let (a, b) = (&periods[0], &periods[1]);
        let shared = universes[0].intersection(&universes[1]).count();
        if universes[0] != universes[1] {
            warnings.push(format!(
                "influencer sets differ ({} vs {}, {shared} shared); rank shifts use their union, nothing else pairs influencers",
                universes[0].len(),
                universes[1].len()
            ));
        }
        let shifts_dir = cfg.comparison_dir();
        let summary: ShiftsSummary = read_json(&mut run, cfg, "report/shifts.json")?;
        if summary.periods != names {
            return Err(CliError::Input("shifts tables were built for other periods; rerun shifts".into()));
        }
        warnings.extend(summary.warnings.iter().cloned());
        let shifts_bytes = run.read(&shifts_dir.join("shifts.csv"))?;
        let rank_shifts: Vec<newsflow::shifts::RankShift> = read_table(&shifts_bytes, "shifts.csv")?;
        let mut shares = BTreeMap::new();
        if summary.labeled {
            for name in &names {
                let rel = format!("type_shares_{name}.csv");
                let rows: Vec<TypeShareCsv> = read_table(&run.read(&shifts_dir.join(&rel))?, &rel)?;
                shares.insert(name.clone(), rows.iter().map(TypeShareRow::from).collect());
            }
        }
        let flow = read_flow(&run.read(&shifts_dir.join("category_flow.csv"))?)?;
        let changes = vec![
            Change::new("dip", Some(a.dip.statistic), Some(b.dip.statistic)),
            Change::new("modularity", Some(a.modularity), Some(b.modularity)),
            Change::new("normalized_cut", Some(a.normalized_cut), Some(b.normalized_cut)),
            Change::new("communities", Some(a.communities as f64), Some(b.communities as f64)),
            Change::new("quotes_per_retweet_left_users", a.quote_retweet.left_users, b.quote_retweet.left_users),
            Change::new("quotes_per_retweet_right_users", a.quote_retweet.right_users, b.quote_retweet.right_users),
        ];
        Some(Comparison {
            changes,
            influencers_shared: shared,
            new_entrant_fraction: summary.new_entrant_fraction,
            rank_shifts,
            type_shares: shares,
            category_flow: flow,
        })
    } else {
        None
    };
    let report = Report {
        seed: cfg.seed,
        periods,
        comparison,
        warnings,
    };
    run.write_json("report.json", &report)?;
    run.write("report.txt", render(&report).as_bytes())?;
    run.finish(cfg.seed, &json!({ "periods": names, "top_n": cfg.report.top_n }))?;
    Ok(report)
}

/// A `type_shares_*.csv` row as written by the core table writer.
#[derive(Debug, Clone, Deserialize)]
struct TypeShareCsv {
    category: MediaCategory,
    media: usize,
    political: usize,
    independent: usize,
    other: usize,
    n: usize,
}

impl From<&TypeShareCsv> for TypeShareRow {
    fn from(r: &TypeShareCsv) -> Self {
        let share = |k: usize| if r.n == 0 { 0.0 } else { k as f64 / r.n as f64 };
        Self {
            category: r.category,
            media: share(r.media),
            political: share(r.political),
            independent: share(r.independent),
            other: share(r.other),
            n: r.n,
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Plain-text rendering of a report.
pub fn render(r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "newsflow report (seed {})", r.seed);
    for p in &r.periods {
        let _ = writeln!(s, "\n== Period {} ({} records, {} influencers) ==", p.name, p.records, p.influencers);
        let _ = writeln!(s, "dip of user positions: {}", p.dip.text);
        let _ = writeln!(s, "modularity: {:.4} (subsample SE {})", p.modularity, opt(p.modularity_se));
        let _ = writeln!(s, "normalized cut: {:.4} (subsample SE {})", p.normalized_cut, opt(p.normalized_cut_se));
        let _ = writeln!(s, "communities: {}", p.communities);
        let q = &p.quote_retweet;
        let _ = writeln!(s, "quotes per retweet: left users {}, right users {}", opt(q.left_users), opt(q.right_users));
        let _ = writeln!(
            s,
            "  by (user, influencer) side: LL {} LR {} RL {} RR {}",
            opt(q.left_on_left),
            opt(q.left_on_right),
            opt(q.right_on_left),
            opt(q.right_on_right)
        );
        let _ = writeln!(s, "top influencers by collective influence:");
        for (c, top) in &p.top_influencers {
            let list: Vec<String> = top.iter().map(|(id, ci)| format!("{id} ({ci})")).collect();
            let _ = writeln!(s, "  {:<17} {}", c.as_str(), if list.is_empty() { "-".into() } else { list.join(", ") });
        }
    }
    if let Some(c) = &r.comparison {
        let _ = writeln!(s, "\n== Changes from {} to {} ==", r.periods[0].name, r.periods[1].name);
        let _ = writeln!(s, "{:<32} {:>10} {:>10} {:>10}  direction", "metric", "first", "second", "delta");
        for ch in &c.changes {
            let dir = serde_json::to_value(ch.direction).expect("serializes");
            let _ = writeln!(
                s,
                "{:<32} {:>10} {:>10} {:>10}  {}",
                ch.metric,
                opt(ch.a),
                opt(ch.b),
                opt(ch.delta),
                dir.as_str().unwrap_or_default()
            );
        }
        let _ = writeln!(s, "influencers in both periods: {}", c.influencers_shared);
        let _ = writeln!(s, "new entrants among top influencers: {}", opt(c.new_entrant_fraction));
        let _ = writeln!(s, "\nrank shifts (best rank in any category):");
        for sh in &c.rank_shifts {
            let rank = |r: Option<usize>| r.map_or("-".to_string(), |x| x.to_string());
            let _ = writeln!(s, "  {:<24} {:>4} -> {:<4}", sh.user_id, rank(sh.rank_1), rank(sh.rank_2));
        }
        for (name, rows) in &c.type_shares {
            let _ = writeln!(s, "\ninfluencer types, {name} (media / political / independent / other):");
            for t in rows {
                let _ = writeln!(
                    s,
                    "  {:<17} {:.2} {:.2} {:.2} {:.2} (n = {})",
                    t.category.as_str(),
                    t.media,
                    t.political,
                    t.independent,
                    t.other,
                    t.n
                );
            }
        }
        let _ = writeln!(s, "\nuser category flows (rows: first period, columns: second):");
        let _ = writeln!(s, "  {}", MediaCategory::ALL.map(|c| c.as_str()).join(" "));
        for (c, row) in MediaCategory::ALL.iter().zip(&c.category_flow) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "  {:<17} {}", c.as_str(), cells.join(" "));
        }
    }
    if !r.warnings.is_empty() {
        let _ = writeln!(s, "\nwarnings:");
        for w in &r.warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    s
}
