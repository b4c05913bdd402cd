//! Scenario orchestration: parse a JSON config, run the requested pipeline,
//! write a JSON result (audit certificates included) and optionally an SVG
//! figure.
//!
//! Result documents carry `"schema": 1`. Timing lives in its own object so
//! determinism checks can compare everything else byte for byte: the same
//! config and seed always reproduce an identical `result` subtree.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use hypertile::exact::{RVec, Rational};
use hypertile::marker::{build_marker_set, verify_marker, MarkerReport, MarkerSet, Window};
use hypertile::region::{
    build_square_partition, orthogonal_partition, OrthoAudit, RegionConfig, RegionPartition,
    SquareRegions,
};
use hypertile::stabilizer::{decompose, quotient_type, CanonicalBasis, QuotientType, StabilizerSpec};
use hypertile::witness::{
    build_hierarchy, certify_pair, eventual_agreement, make_schedule, orbit_seed, trace,
    HierarchyDescription, PairCertificate, ReductionTrace, Schedule,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("scenario failed: {0}")]
    Scenario(String),
    #[error("svg supports only 2-D partitions, got dimension {0}")]
    UnsupportedDimension(usize),
}

impl CliError {
    /// Process exit code: 2 for config problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": SCHEMA_VERSION,
            "error": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

/// A grid used as an "existing partition" input for orthogonal scenarios.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridInput {
    pub pitch: Rational,
    pub anchor: Vec<Rational>,
}

/// Scenario configs. All numbers are rational strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Decompose {
        spec: StabilizerSpec,
    },
    Markers {
        window: Window,
        d: Rational,
        #[serde(default)]
        seed: u64,
    },
    SquareRegions {
        window: Window,
        d: Rational,
        epsilon: Rational,
        #[serde(default)]
        seed: u64,
    },
    Orthogonal {
        window: Window,
        d: Rational,
        separation: Rational,
        existing: Vec<GridInput>,
        #[serde(default)]
        seed: u64,
    },
    Witness {
        dim: usize,
        levels: usize,
        base: Rational,
        epsilon: Rational,
        pairs: usize,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AuditLevel {
    Fast,
    #[default]
    Full,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed_override: Option<u64>,
    pub audit_level: AuditLevel,
}

/// Results, one variant per scenario kind. Everything round-trips through
/// JSON exactly (rationals are strings).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioResult {
    Decompose {
        basis: CanonicalBasis,
        quotient: QuotientType,
    },
    Markers {
        markers: MarkerSet,
        report: MarkerReport,
    },
    SquareRegions {
        partition: RegionPartition,
        face_gap_ok: bool,
        face_gap_violations: usize,
        edge_ok: bool,
        partition_ok: Option<bool>,
        interior_rects: usize,
    },
    Orthogonal {
        partition: RegionPartition,
        audit: OrthoAudit,
    },
    Witness {
        schedule: Schedule,
        hierarchy: HierarchyDescription,
        traces: Vec<ReductionTrace>,
        convergence: Vec<ConvergenceRow>,
    },
}

/// One row of the witness convergence table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub x: RVec,
    pub y: RVec,
    pub distance: Rational,
    pub agreement: Option<usize>,
    pub certificate: PairCertificate,
}

/// Full result document; `timing` is excluded from determinism comparisons.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema: u32,
    pub seed: u64,
    pub result: ScenarioResult,
    pub timing: Timing,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub total_ms: u128,
}

pub fn parse_config(text: &str) -> Result<Scenario, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn scenario_seed(s: &Scenario) -> u64 {
    match s {
        Scenario::Decompose { .. } => 0,
        Scenario::Markers { seed, .. }
        | Scenario::SquareRegions { seed, .. }
        | Scenario::Orthogonal { seed, .. }
        | Scenario::Witness { seed, .. } => *seed,
    }
}

/// Runs a scenario and returns the deterministic result plus the seed used.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<(ScenarioResult, u64), CliError> {
    let seed = opts.seed_override.unwrap_or_else(|| scenario_seed(scenario));
    let fail = |e: &dyn std::fmt::Display| CliError::Scenario(e.to_string());
    let result = match scenario {
        Scenario::Decompose { spec } => {
            let basis = decompose(spec).map_err(|e| fail(&e))?;
            let quotient = quotient_type(&basis);
            ScenarioResult::Decompose { basis, quotient }
        }
        Scenario::Markers { window, d, .. } => {
            let markers = build_marker_set(window, d, seed).map_err(|e| fail(&e))?;
            let report = verify_marker(window, &markers);
            ScenarioResult::Markers { markers, report }
        }
        Scenario::SquareRegions {
            window, d, epsilon, ..
        } => {
            let cfg = RegionConfig::for_scale(d.clone(), epsilon.clone()).map_err(|e| fail(&e))?;
            let out: SquareRegions =
                build_square_partition(window, &cfg, seed).map_err(|e| fail(&e))?;
            let partition_ok = match opts.audit_level {
                AuditLevel::Fast => None,
                AuditLevel::Full => Some(out.partition_audit.ok()),
            };
            ScenarioResult::SquareRegions {
                face_gap_ok: out.face_audit.ok(),
                face_gap_violations: out.face_audit.violations.len(),
                edge_ok: out.edge_audit.ok(),
                partition_ok,
                interior_rects: out.edge_audit.interior_rects,
                partition: out.partition,
            }
        }
        Scenario::Orthogonal {
            window,
            d,
            separation,
            existing,
            ..
        } => {
            let mut cfg =
                RegionConfig::for_scale(d.clone(), d.clone()).map_err(|e| fail(&e))?;
            cfg.separation = separation.clone();
            let grids: Vec<RegionPartition> = existing
                .iter()
                .map(|g| RegionPartition::grid(window, &g.pitch, &RVec::new(g.anchor.clone())))
                .collect();
            let refs: Vec<&RegionPartition> = grids.iter().collect();
            let out = orthogonal_partition(window, &refs, d, refs.len().max(1), &cfg, seed)
                .map_err(|e| fail(&e))?;
            ScenarioResult::Orthogonal {
                partition: out.partition,
                audit: out.audit,
            }
        }
        Scenario::Witness {
            dim,
            levels,
            base,
            epsilon,
            pairs,
            ..
        } => {
            let schedule = make_schedule(base, *levels, epsilon).map_err(|e| fail(&e))?;
            let d_top = schedule.d_at(*levels).clone();
            let edge = &d_top * &Rational::from_int(6);
            let window = Window::new(RVec::zero(*dim), RVec::new(vec![edge; *dim]))
                .map_err(|e| fail(&e))?;
            let tail: Vec<Rational> = Vec::new();
            let h = build_hierarchy(&window, &schedule, orbit_seed(seed, &tail, (0, *dim)), &tail)
                .map_err(|e| fail(&e))?;

            let mut stream = hypertile::seq::splitmix64(seed ^ 0x77697468);
            let mut next = || {
                stream = hypertile::seq::splitmix64(stream);
                stream
            };
            let span = window.edge(0) - &d_top * &Rational::from_int(2);
            let d1 = schedule.d_at(1).clone();
            let mut traces = Vec::new();
            let mut convergence = Vec::new();
            for _ in 0..*pairs {
                let x = RVec::new(
                    (0..*dim)
                        .map(|_| {
                            let f = Rational::new((next() % 1_000_000) as i64, 1_000_000);
                            &d_top + &(&span * &f)
                        })
                        .collect(),
                );
                let delta = RVec::new(
                    (0..*dim)
                        .map(|_| {
                            let f = Rational::new((next() % 1001) as i64 - 500, 1000);
                            &d1 * &f
                        })
                        .collect(),
                );
                let y = x.add(&delta);
                let tx = trace(&x, &h).map_err(|e| fail(&e))?;
                let ty = trace(&y, &h).map_err(|e| fail(&e))?;
                let agreement = eventual_agreement(&tx, &ty).map_err(|e| fail(&e))?;
                let certificate = certify_pair(&h, &x, &y).map_err(|e| fail(&e))?;
                convergence.push(ConvergenceRow {
                    distance: x.sup_dist(&y),
                    x,
                    y,
                    agreement,
                    certificate,
                });
                traces.push(tx);
                traces.push(ty);
            }
            ScenarioResult::Witness {
                schedule,
                hierarchy: h.describe(),
                traces,
                convergence,
            }
        }
    };
    Ok((result, seed))
}

/// Runs a scenario file end to end: result JSON to `out` (or stdout by the
/// caller), optional SVG for 2-D partitions.
pub fn run_scenario_file(
    config_path: &Path,
    opts: &RunOptions,
    out_path: Option<&Path>,
    svg_path: Option<&Path>,
) -> Result<ResultDocument, CliError> {
    let started = std::time::Instant::now();
    let scenario = load_config(config_path)?;
    let (result, seed) = run_scenario(&scenario, opts)?;
    if let Some(svg) = svg_path {
        match &result {
            ScenarioResult::SquareRegions { partition, .. } => {
                fs::write(svg, render_svg(partition, None)?)?;
            }
            ScenarioResult::Orthogonal { partition, .. } => {
                fs::write(svg, render_svg(partition, None)?)?;
            }
            _ => {
                return Err(CliError::Scenario(
                    "svg output requires a partition scenario".into(),
                ))
            }
        }
    }
    let doc = ResultDocument {
        schema: SCHEMA_VERSION,
        seed,
        result,
        timing: Timing {
            total_ms: started.elapsed().as_millis(),
        },
    };
    if let Some(path) = out_path {
        fs::write(path, serialize_result(&doc))?;
    }
    Ok(doc)
}

/// Serializes a result document; field order is fixed by the struct, so the
/// bytes are a deterministic function of the content.
pub fn serialize_result(doc: &ResultDocument) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(doc).expect("result serializes");
    bytes.push(b'\n');
    bytes
}

/// The determinism view: the result subtree alone, without timing.
pub fn deterministic_bytes(doc: &ResultDocument) -> Vec<u8> {
    serde_json::to_vec(&doc.result).expect("result serializes")
}

/// Renders a 2-D partition as SVG: one rectangle per region, with the owned
/// (lower/left) half-open edges stroked solid. An optional second partition
/// is drawn as contrasting unfilled strokes on top.
pub fn render_svg(
    partition: &RegionPartition,
    overlay: Option<&RegionPartition>,
) -> Result<String, CliError> {
    let dim = partition.window.dim();
    if dim != 2 {
        return Err(CliError::UnsupportedDimension(dim));
    }
    let wlo0 = partition.window.lo.coord(0).to_f64_lossy();
    let wlo1 = partition.window.lo.coord(1).to_f64_lossy();
    let whi0 = partition.window.hi.coord(0).to_f64_lossy();
    let whi1 = partition.window.hi.coord(1).to_f64_lossy();
    let width = whi0 - wlo0;
    let height = whi1 - wlo1;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="0 0 {width} {height}">"#
    );
    const FILLS: [&str; 6] = [
        "#dce9f5", "#f5e9dc", "#e3f5dc", "#f5dceb", "#ecf0d5", "#dcd5f0",
    ];
    for rect in partition.all_rects() {
        let x = rect.lo.coord(0).to_f64_lossy() - wlo0;
        let yhi = rect.hi.coord(1).to_f64_lossy();
        let y = whi1 - yhi; // svg y axis points down
        let w = rect.edge(0).to_f64_lossy();
        let h = rect.edge(1).to_f64_lossy();
        let fill = FILLS[rect.id % FILLS.len()];
        let _ = writeln!(
            svg,
            r#"  <rect x="{x}" y="{y}" width="{w}" height="{h}" fill="{fill}" stroke="none"/>"#
        );
        // Owned edges: left and bottom (half-open convention — interior
        // boundary points belong to the rect above and to the right).
        let yb = whi1 - rect.lo.coord(1).to_f64_lossy();
        let _ = writeln!(
            svg,
            r##"  <line x1="{x}" y1="{y}" x2="{x}" y2="{yb}" stroke="#333" stroke-width="0.4"/>"##
        );
        let xr = x + w;
        let _ = writeln!(
            svg,
            r##"  <line x1="{x}" y1="{yb}" x2="{xr}" y2="{yb}" stroke="#333" stroke-width="0.4"/>"##
        );
    }
    if let Some(other) = overlay {
        if other.window.dim() != 2 {
            return Err(CliError::UnsupportedDimension(other.window.dim()));
        }
        for rect in other.all_rects() {
            let x = rect.lo.coord(0).to_f64_lossy() - wlo0;
            let y = whi1 - rect.hi.coord(1).to_f64_lossy();
            let w = rect.edge(0).to_f64_lossy();
            let h = rect.edge(1).to_f64_lossy();
            let _ = writeln!(
                svg,
                r##"  <rect x="{x}" y="{y}" width="{w}" height="{h}" fill="none" stroke="#c0392b" stroke-width="0.6"/>"##
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
