//! Command implementations behind the `pursuit` binary. Each command takes
//! already-parsed inputs and writers so tests can drive it without a process.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use pursuit_core::trajectory::DEFAULT_SCREEN_PX;
use pursuit_core::{
    generate_gaze, parse_scenario, replay, run_scenario, sweep, ConfigFile, DetectionEvent,
    DetectorConfig, GazeModel, GazeSample, Layout, Method, Replay, Scenario, SweepRow, TargetId,
    TraceRow,
};

pub const TRACE_HEADER: [&str; 11] = [
    "t",
    "target",
    "slope_x",
    "slope_y",
    "corr_x",
    "corr_y",
    "cond_x",
    "cond_y",
    "cond_both",
    "consecutive",
    "event",
];

pub const GAZE_LOG_HEADER: [&str; 3] = ["t_ms", "gx_px", "gy_px"];

/// Default parameters for `method`, overridden by the TOML file at `path`.
pub fn load_config(method: Method, path: Option<&Path>) -> Result<DetectorConfig> {
    let Some(path) = path else {
        return Ok(DetectorConfig::defaults_for(method));
    };
    let source = read_to_string(path)?;
    let file = ConfigFile::parse(&source).with_context(|| path.display().to_string())?;
    let config = file
        .config_for(method)
        .with_context(|| path.display().to_string())?;
    Ok(config)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let source = read_to_string(path)?;
    parse_scenario(&source).with_context(|| path.display().to_string())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            r.t_s.to_string(),
            r.target.0.to_string(),
            opt(r.slope[0]),
            opt(r.slope[1]),
            opt(r.correlation[0]),
            opt(r.correlation[1]),
            flag(r.condition[0]).into(),
            flag(r.condition[1]).into(),
            flag(r.condition_both()).into(),
            r.consecutive.to_string(),
            flag(r.event).into(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_events<W: Write>(layout: &Layout, events: &[DetectionEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample", "t_ms", "target", "label", "method"])?;
    for e in events {
        let label = layout
            .get(e.target)
            .map(|t| t.label.to_string())
            .unwrap_or_default();
        w.write_record([
            e.sample.to_string(),
            e.t_ms.to_string(),
            e.target.0.to_string(),
            label,
            e.method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the scenario through one detector and writes the per-sample,
/// per-target trace.
pub fn cmd_trace<W: Write>(
    scenario: &Scenario,
    config: DetectorConfig,
    out: W,
) -> Result<Vec<DetectionEvent>> {
    let metrics = run_scenario(scenario, &[config])?;
    let run = metrics
        .runs
        .into_iter()
        .next()
        .expect("one config, one run");
    write_trace(&run.trace, out)?;
    Ok(run.events)
}

/// Per-method scenario summary: events, hits, false positives, first latency.
pub fn cmd_run<W: Write>(scenario: &Scenario, configs: &[DetectorConfig], out: W) -> Result<()> {
    let metrics = run_scenario(scenario, configs)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "events",
        "true_positives",
        "false_positives",
        "first_latency",
    ])?;
    for run in &metrics.runs {
        w.write_record([
            run.method().to_string(),
            run.events.len().to_string(),
            run.true_positives().to_string(),
            run.false_positives().to_string(),
            run.first_latency()
                .map(|l| l.to_string())
                .unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_sweep<W: Write>(
    counts: &[usize],
    configs: &[DetectorConfig],
    model: GazeModel,
    repetitions: usize,
    seed: u64,
    out: W,
) -> Result<Vec<SweepRow>> {
    let rows = sweep(counts, configs, model, repetitions, seed)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "targets",
        "method",
        "scenarios",
        "true_positives",
        "false_positives",
        "missed",
        "latency_mean",
        "latency_min",
        "latency_max",
    ])?;
    for r in &rows {
        w.write_record([
            r.targets.to_string(),
            r.method.to_string(),
            r.scenarios.to_string(),
            r.true_positives.to_string(),
            r.false_positives.to_string(),
            r.missed.to_string(),
            opt(r.latency_mean),
            r.latency_min.map(|v| v.to_string()).unwrap_or_default(),
            r.latency_max.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Target positions at t = 0 for the dial layout with `n` selectable targets.
pub fn cmd_layout<W: Write>(n: usize, out: W) -> Result<()> {
    let layout = Layout::dialplate(n, DEFAULT_SCREEN_PX)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "id",
        "label",
        "x",
        "y",
        "radius",
        "period_s",
        "direction",
        "phase",
    ])?;
    for spec in layout.targets() {
        let tr = &spec.trajectory;
        let p = tr.position_at(0.0);
        w.write_record([
            spec.id.0.to_string(),
            spec.label.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            tr.radius().to_string(),
            tr.period().to_string(),
            tr.direction().as_str().to_owned(),
            tr.phase().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes samples with shortest round-trip float formatting, so reading the
/// log back yields bit-identical values.
pub fn write_gaze_log<W: Write>(samples: &[GazeSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GAZE_LOG_HEADER)?;
    for s in samples {
        w.write_record([s.t_ms.to_string(), s.x.to_string(), s.y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_generate<W: Write>(scenario: &Scenario, out: W) -> Result<usize> {
    scenario.validate()?;
    let samples = generate_gaze(scenario);
    write_gaze_log(&samples, out)?;
    Ok(samples.len())
}

#[derive(Deserialize)]
struct LogRow {
    t_ms: f64,
    gx_px: f64,
    gy_px: f64,
}

/// Parses a `t_ms,gx_px,gy_px` log. Timestamps must strictly increase.
/// Errors name the 1-based line of the offending row.
pub fn read_gaze_log<R: Read>(input: R) -> Result<Vec<GazeSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader.headers().context("line 1: missing header")?.clone();
    for column in GAZE_LOG_HEADER {
        if !headers.iter().any(|h| h == column) {
            bail!("line 1: missing column `{column}`");
        }
    }
    let mut samples: Vec<GazeSample> = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = match reader.read_record(&mut record) {
            Ok(more) => more,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                bail!("line {line}: {e}");
            }
        };
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let row: LogRow = record
            .deserialize(Some(&headers))
            .map_err(|e| anyhow::anyhow!("line {line}: malformed row: {e}"))?;
        if !(row.t_ms.is_finite() && row.gx_px.is_finite() && row.gy_px.is_finite()) {
            bail!("line {line}: non-finite value");
        }
        if let Some(prev) = samples.last() {
            if row.t_ms <= prev.t_ms {
                bail!(
                    "line {line}: timestamp {} ms does not follow {} ms",
                    row.t_ms,
                    prev.t_ms
                );
            }
        }
        samples.push(GazeSample::new(row.t_ms, row.gx_px, row.gy_px));
    }
    Ok(samples)
}

/// Replays a logged gaze stream. Identical code path to live ingestion.
pub fn cmd_replay<W: Write>(
    layout: &Layout,
    samples: &[GazeSample],
    config: DetectorConfig,
    trace_out: Option<W>,
) -> Result<Replay> {
    let result = replay(layout, samples, config, trace_out.is_some())?;
    if let Some(out) = trace_out {
        write_trace(&result.trace, out)?;
    }
    Ok(result)
}

/// Ideal pursuit of `target` on the `n`-target dial for `duration_s`.
pub fn ideal_scenario(n: usize, target: u32, duration_s: f64, seed: u64) -> Result<Scenario> {
    let layout = Layout::dialplate(n, DEFAULT_SCREEN_PX)?;
    if layout.get(TargetId(target)).is_none() {
        bail!("target {target} is not part of the {n}-target layout");
    }
    let mut scenario = Scenario::ideal_pursuit(layout, TargetId(target), duration_s);
    scenario.seed = seed;
    Ok(scenario)
}

/// Opens `path` for writing, or stdout when absent.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trip_is_exact() {
        let scenario = {
            let mut s = ideal_scenario(8, 2, 1.0, 5).unwrap();
            s.gaze_model.noise_sigma_px = 1.7;
            s
        };
        let samples = generate_gaze(&scenario);
        let mut buf = Vec::new();
        write_gaze_log(&samples, &mut buf).unwrap();
        let back = read_gaze_log(buf.as_slice()).unwrap();
        assert_eq!(back.len(), samples.len());
        for (a, b) in back.iter().zip(&samples) {
            assert_eq!(a.t_ms.to_bits(), b.t_ms.to_bits());
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
        }
    }

    #[test]
    fn log_errors_name_the_line() {
        let err = read_gaze_log("t_ms,gx_px,gy_px\n0,1,2\n16,1,oops\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 3:"), "{err}");
        let err =
            read_gaze_log("t_ms,gx_px,gy_px\n0,1,2\n16,1,2\n10,1,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 4:"), "{err}");
        let err = read_gaze_log("t_ms,gx_px,gy_px\n0,1,2\n16,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 3:"), "{err}");
        let err = read_gaze_log("t,x,y\n0,1,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 1:"), "{err}");
    }

    #[test]
    fn columns_may_be_reordered() {
        let s = read_gaze_log("gy_px,t_ms,gx_px\n3,0,1\n".as_bytes()).unwrap();
        assert_eq!(s, vec![GazeSample::new(0.0, 1.0, 3.0)]);
    }

    #[test]
    fn undefined_metrics_are_empty_fields() {
        let mut scenario = ideal_scenario(6, 0, 0.5, 0).unwrap();
        scenario.schedule[0].target = None;
        let mut buf = Vec::new();
        cmd_trace(&scenario, DetectorConfig::slope_defaults(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER.join(","));
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[2..6], ["", "", "", ""], "{line}");
        }
    }

    #[test]
    fn layout_rows() {
        let mut buf = Vec::new();
        cmd_layout(6, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 8);
        assert!(rows[7].starts_with("6,CANCEL,"), "{}", rows[7]);
        assert!(cmd_layout(7, Vec::new()).is_err());
    }
}
