//! Suite runner: expand templates × seeds × arms, run episodes in parallel,
//! write per-episode records and maps, and aggregate paired comparisons.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plan::PlannerRegistry;
use crate::priors::save_score_map;

use super::config::{Arm, SuiteConfig};
use super::episode::{run_episode_with, EpisodeResult};
use super::metrics::{paired_sign_test, percentile_buckets, Bucket};

/// Mean belief error at one checkpoint fraction, over a row's episodes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RmseMean {
    pub fraction: f64,
    pub mean_rmse: f64,
}

/// One template × arm aggregate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggRow {
    pub template: String,
    pub arm: String,
    pub episodes: usize,
    pub mean_found_fraction: f64,
    /// Episodes that found at least one target.
    pub found_any: usize,
    /// Mean steps to first find, over episodes that found anything.
    pub mean_steps_to_first: Option<f64>,
    /// Mean found-fraction over the worst starting maps (by quality).
    pub buckets: Vec<Bucket>,
    pub mean_rmse_at: Vec<RmseMean>,
}

/// Paired win/loss comparison of the `tta` arm against `no_tta` on
/// found-fraction, per template.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignTestRow {
    pub template: String,
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    pub p_one_sided: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: Option<String>,
    /// Wall-clock stamp; everything else in the output is deterministic.
    pub generated_at_unix_ms: u64,
    pub episodes: usize,
    pub rows: Vec<AggRow>,
    pub sign_tests: Vec<SignTestRow>,
}

/// Run a suite with the built-in planners.
pub fn run_suite(cfg: &SuiteConfig, out_dir: &Path, jobs: Option<usize>) -> Result<SuiteReport> {
    run_suite_with(cfg, out_dir, jobs, &PlannerRegistry::with_builtins())
}

/// Run a suite, resolving planners through the given registry. Writes
/// `episodes.jsonl` (byte-identical across reruns), `report.json`, and
/// one final belief map per episode under `maps/`.
pub fn run_suite_with(
    cfg: &SuiteConfig,
    out_dir: &Path,
    jobs: Option<usize>,
    registry: &PlannerRegistry,
) -> Result<SuiteReport> {
    cfg.validate()?;
    let episodes = cfg.expand();

    type RanEpisode = (String, String, Arm, EpisodeResult, crate::priors::ScoreMap);
    let run_all = || -> Result<Vec<RanEpisode>> {
        episodes
            .par_iter()
            .map(|(id, template, arm, ecfg)| {
                let (mut result, map) = run_episode_with(ecfg, registry)
                    .map_err(|e| e.in_episode(id.clone()))?;
                result.id = id.clone();
                result.template = Some(template.clone());
                result.arm = Some(arm.label().to_string());
                result.lambda_map_path = Some(format!("maps/{}.csv", id.replace(':', "_")));
                Ok((id.clone(), template.clone(), *arm, result, map))
            })
            .collect()
    };
    let mut results = match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(run_all)?
        }
        None => run_all()?,
    };
    // aggregation and emission are order-independent: sort by episode id
    results.sort_by(|a, b| a.0.cmp(&b.0));

    check_pairing(&results)?;

    fs::create_dir_all(out_dir.join("maps")).map_err(|e| Error::io(out_dir, e))?;
    let jsonl_path = out_dir.join("episodes.jsonl");
    let mut jsonl =
        fs::File::create(&jsonl_path).map_err(|e| Error::io(&jsonl_path, e))?;
    for (id, _, _, result, map) in &results {
        let line = serde_json::to_string(result).map_err(|e| Error::Json { path: None, source: e })?;
        writeln!(jsonl, "{line}").map_err(|e| Error::io(&jsonl_path, e))?;
        let map_path = out_dir.join(format!("maps/{}.csv", id.replace(':', "_")));
        save_score_map(map, &map_path)?;
    }

    let report = aggregate(cfg, &results)?;
    let report_path = out_dir.join("report.json");
    let pretty = serde_json::to_string_pretty(&report).map_err(|e| Error::Json { path: None, source: e })?;
    fs::write(&report_path, pretty + "\n").map_err(|e| Error::io(&report_path, e))?;
    Ok(report)
}

/// Same template + seed must mean the same world and base map in every arm;
/// anything else would unpair the comparison.
fn check_pairing(
    results: &[(String, String, Arm, EpisodeResult, crate::priors::ScoreMap)],
) -> Result<()> {
    let mut seen: BTreeMap<(String, u64), (String, String)> = BTreeMap::new();
    for (id, template, _, r, _) in results {
        let key = (template.clone(), r.seed);
        match seen.get(&key) {
            None => {
                seen.insert(key, (r.world_hash.clone(), r.base_hash.clone()));
            }
            Some((wh, bh)) => {
                if *wh != r.world_hash || *bh != r.base_hash {
                    return Err(Error::Degenerate(format!(
                        "arms of template {template} seed {} saw different worlds ({id})",
                        r.seed
                    )));
                }
            }
        }
    }
    Ok(())
}

fn aggregate(
    cfg: &SuiteConfig,
    results: &[(String, String, Arm, EpisodeResult, crate::priors::ScoreMap)],
) -> Result<SuiteReport> {
    let mut rows = Vec::new();
    let mut sign_tests = Vec::new();

    for template in &cfg.templates {
        for &arm in &cfg.arms {
            let group: Vec<&EpisodeResult> = results
                .iter()
                .filter(|(_, t, a, ..)| *t == template.name && *a == arm)
                .map(|(.., r, _)| r)
                .collect();
            if group.is_empty() {
                continue;
            }

            let n = group.len();
            let mean_found =
                group.iter().map(|r| r.found_fraction).sum::<f64>() / n as f64;
            let finders: Vec<usize> =
                group.iter().filter_map(|r| r.steps_to_first).collect();
            let mean_steps_to_first = if finders.is_empty() {
                None
            } else {
                Some(finders.iter().sum::<usize>() as f64 / finders.len() as f64)
            };

            let quality_pairs: Vec<(f64, &EpisodeResult)> = group
                .iter()
                .map(|r| {
                    let q = r.base_quality.ok_or_else(|| {
                        Error::Degenerate(format!(
                            "episode {} has no starting-map quality; cannot bucket",
                            r.id
                        ))
                    })?;
                    Ok((q, *r))
                })
                .collect::<Result<Vec<_>>>()?;
            let buckets =
                percentile_buckets(&quality_pairs, &cfg.percentile_fractions)?.buckets;

            // all episodes of a template share its checkpoint fractions
            let mut sums: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
            for r in &group {
                for c in &r.rmse_at {
                    let e = sums.entry(c.fraction.to_bits()).or_insert((0.0, 0));
                    e.0 += c.rmse;
                    e.1 += 1;
                }
            }
            let mean_rmse_at = sums
                .into_iter()
                .map(|(bits, (sum, count))| RmseMean {
                    fraction: f64::from_bits(bits),
                    mean_rmse: sum / count as f64,
                })
                .collect();

            rows.push(AggRow {
                template: template.name.clone(),
                arm: arm.label().to_string(),
                episodes: n,
                mean_found_fraction: mean_found,
                found_any: group.iter().filter(|r| r.targets_found > 0).count(),
                mean_steps_to_first,
                buckets,
                mean_rmse_at,
            });
        }

        if cfg.arms.contains(&Arm::Tta) && cfg.arms.contains(&Arm::NoTta) {
            let by_seed = |arm: Arm| -> BTreeMap<u64, f64> {
                results
                    .iter()
                    .filter(|(_, t, a, ..)| *t == template.name && *a == arm)
                    .map(|(.., r, _)| (r.seed, r.found_fraction))
                    .collect()
            };
            let on = by_seed(Arm::Tta);
            let off = by_seed(Arm::NoTta);
            let diffs: Vec<f64> = on
                .iter()
                .filter_map(|(seed, v)| off.get(seed).map(|w| v - w))
                .collect();
            let t = paired_sign_test(diffs);
            sign_tests.push(SignTestRow {
                template: template.name.clone(),
                wins: t.wins,
                losses: t.losses,
                ties: t.ties,
                p_one_sided: t.p_one_sided,
            });
        }
    }

    Ok(SuiteReport {
        name: cfg.name.clone(),
        generated_at_unix_ms: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
        episodes: results.len(),
        rows,
        sign_tests,
    })
}

/// Render the aggregate rows as an aligned text table (plus sign-test
/// lines), for terminal display alongside `report.json`.
pub fn render_table(report: &SuiteReport) -> String {
    let mut header = vec![
        "template".to_string(),
        "arm".to_string(),
        "episodes".to_string(),
        "found".to_string(),
    ];
    if let Some(first) = report.rows.first() {
        for b in &first.buckets {
            header.push(format!("found@worst{:.0}%", b.fraction * 100.0));
        }
        for m in &first.mean_rmse_at {
            header.push(format!("rmse@{:.2}", m.fraction));
        }
    }
    header.push("steps_to_first".to_string());

    let mut table: Vec<Vec<String>> = vec![header];
    for row in &report.rows {
        let mut cells = vec![
            row.template.clone(),
            row.arm.clone(),
            row.episodes.to_string(),
            format!("{:.4}", row.mean_found_fraction),
        ];
        for b in &row.buckets {
            cells.push(format!("{:.4}", b.mean_found_fraction));
        }
        for m in &row.mean_rmse_at {
            cells.push(format!("{:.4}", m.mean_rmse));
        }
        cells.push(match row.mean_steps_to_first {
            Some(s) => format!("{s:.1}"),
            None => "-".to_string(),
        });
        table.push(cells);
    }

    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| table.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{:<w$}", cell, w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    for t in &report.sign_tests {
        out.push_str(&format!(
            "sign test {}: tta wins {} / losses {} / ties {}, one-sided p = {:.6}\n",
            t.template, t.wins, t.losses, t.ties, t.p_one_sided
        ));
    }
    out
}
