//! File outputs: CSV tables, the regret-curve SVG, and re-verification of
//! exported summaries.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::summary::MonteCarloSummary;
use super::trial::TrialResult;

/// Formats with six significant digits; the rounded value is printed with
/// the shortest representation that round-trips, so re-exports are
/// byte-identical.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(5 - exp);
    let rounded = (x * scale).round() / scale;
    format!("{rounded}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// `agent_id,t,mean_cum_regret,std_cum_regret`, one row per agent and step.
pub fn export_csv(summary: &MonteCarloSummary, path: &Path) -> Result<()> {
    let mut out = String::from("agent_id,t,mean_cum_regret,std_cum_regret\n");
    for (ai, id) in summary.agent_ids.iter().enumerate() {
        for t in 0..summary.t {
            out.push_str(id);
            out.push(',');
            out.push_str(&(t + 1).to_string());
            out.push(',');
            out.push_str(&fmt_sig6(summary.mean[ai][t]));
            out.push(',');
            out.push_str(&fmt_sig6(summary.std[ai][t]));
            out.push('\n');
        }
    }
    write_file(path, &out)
}

/// Raw per-trial curves at full precision: `trial_id,agent_id,t,cum_regret`.
pub fn export_trials_csv(trials: &[TrialResult], path: &Path) -> Result<()> {
    let mut out = String::from("trial_id,agent_id,t,cum_regret\n");
    for trial in trials {
        for agent in &trial.agents {
            for (t, c) in agent.trace.cumulative.iter().enumerate() {
                out.push_str(&trial.trial_id.to_string());
                out.push(',');
                out.push_str(&agent.id);
                out.push(',');
                out.push_str(&(t + 1).to_string());
                out.push(',');
                out.push_str(&format!("{c}"));
                out.push('\n');
            }
        }
    }
    write_file(path, &out)
}

/// Win-rate matrix with agent ids as both header and row labels.
pub fn export_pairwise_csv(matrix: &[Vec<f64>], agent_ids: &[String], path: &Path) -> Result<()> {
    let mut out = String::from("agent_id");
    for id in agent_ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in agent_ids.iter().enumerate() {
        out.push_str(id);
        for v in &matrix[i] {
            out.push(',');
            out.push_str(&fmt_sig6(*v));
        }
        out.push('\n');
    }
    write_file(path, &out)
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Per-agent trial curves: `(agent_id, [(trial_id, cumulative regret)])`.
pub type TrialCurves = Vec<(String, Vec<(u64, Vec<f64>)>)>;

/// Parsed per-trial curves keyed by agent, trials in ascending id order.
pub fn read_trials_csv(path: &Path) -> Result<TrialCurves> {
    let text = read_to_string(path)?;
    let mut rows: Vec<(u64, String, usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Usage(format!("{}: bad row at line {}", path.display(), lineno + 1)));
        }
        let trial: u64 = parts[0]
            .parse()
            .map_err(|_| Error::Usage(format!("bad trial id at line {}", lineno + 1)))?;
        let t: usize = parts[2]
            .parse()
            .map_err(|_| Error::Usage(format!("bad step at line {}", lineno + 1)))?;
        let v: f64 = parts[3]
            .parse()
            .map_err(|_| Error::Usage(format!("bad value at line {}", lineno + 1)))?;
        rows.push((trial, parts[1].to_string(), t, v));
    }
    let mut agents: Vec<String> = Vec::new();
    for (_, id, _, _) in &rows {
        if !agents.contains(id) {
            agents.push(id.clone());
        }
    }
    let mut out = Vec::new();
    for id in agents {
        let mut per_trial: std::collections::BTreeMap<u64, Vec<(usize, f64)>> = Default::default();
        for (trial, aid, t, v) in &rows {
            if aid == &id {
                per_trial.entry(*trial).or_default().push((*t, *v));
            }
        }
        let curves = per_trial
            .into_iter()
            .map(|(trial, mut pts)| {
                pts.sort_by_key(|(t, _)| *t);
                (trial, pts.into_iter().map(|(_, v)| v).collect())
            })
            .collect();
        out.push((id, curves));
    }
    Ok(out)
}

/// Recomputes mean/std from the raw per-trial CSV and diffs against the
/// exported summary. Returns the largest absolute deviation; anything above
/// `1e-9` is an error.
pub fn verify_outputs(dir: &Path) -> Result<f64> {
    let summary_path = dir.join("summary.csv");
    let trials_path = dir.join("trials.csv");
    let summary_text = read_to_string(&summary_path)?;
    let curves = read_trials_csv(&trials_path)?;

    let mut max_diff: f64 = 0.0;
    for (lineno, line) in summary_text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::Usage(format!("bad summary row at line {}", lineno + 1)));
        }
        let id = parts[0];
        let t: usize = parts[1]
            .parse()
            .map_err(|_| Error::Usage(format!("bad step at line {}", lineno + 1)))?;
        let mean_file: f64 = parts[2].parse().unwrap_or(f64::NAN);
        let std_file: f64 = parts[3].parse().unwrap_or(f64::NAN);

        let (_, trials) = curves
            .iter()
            .find(|(aid, _)| aid == id)
            .ok_or_else(|| Error::Usage(format!("agent '{id}' missing from trials.csv")))?;
        let n = trials.len() as f64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for (_, curve) in trials {
            let v = *curve.get(t - 1).ok_or_else(|| {
                Error::Usage(format!("trial curve too short for step {t} of agent '{id}'"))
            })?;
            sum += v;
            sq += v * v;
        }
        let mean = sum / n;
        let std = (sq / n - mean * mean).max(0.0).sqrt();
        // Compare after applying the same output rounding.
        let mean_re: f64 = fmt_sig6(mean).parse().unwrap();
        let std_re: f64 = fmt_sig6(std).parse().unwrap();
        max_diff = max_diff.max((mean_re - mean_file).abs()).max((std_re - std_file).abs());
    }
    if max_diff > 1e-9 {
        return Err(Error::Numeric(format!(
            "summary does not match recomputation from trials.csv (max diff {max_diff:.3e})"
        )));
    }
    Ok(max_diff)
}

const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Self-contained polyline chart: one mean line per agent with a +-std band,
/// axes with ticks, and a legend.
pub fn emit_svg(summary: &MonteCarloSummary, path: &Path) -> Result<()> {
    let width = 860.0;
    let height = 520.0;
    let (ml, mr, mt, mb) = (70.0, 190.0, 20.0, 55.0);
    let pw = width - ml - mr;
    let ph = height - mt - mb;

    let t_max = summary.t.max(1) as f64;
    let mut y_min: f64 = 0.0;
    let mut y_max: f64 = f64::MIN;
    for ai in 0..summary.agent_ids.len() {
        for t in 0..summary.t {
            y_min = y_min.min(summary.mean[ai][t] - summary.std[ai][t]);
            y_max = y_max.max(summary.mean[ai][t] + summary.std[ai][t]);
        }
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_max += pad;

    let x_of = |t: f64| ml + (t - 1.0) / (t_max - 1.0).max(1.0) * pw;
    let y_of = |v: f64| mt + (y_max - v) / (y_max - y_min) * ph;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Bands first so the mean lines draw on top.
    for (ai, _) in summary.agent_ids.iter().enumerate() {
        let color = PALETTE[ai % PALETTE.len()];
        let mut d = String::from("M");
        for t in 0..summary.t {
            let x = x_of((t + 1) as f64);
            let y = y_of(summary.mean[ai][t] + summary.std[ai][t]);
            d.push_str(&format!(" {x:.2},{y:.2}"));
        }
        for t in (0..summary.t).rev() {
            let x = x_of((t + 1) as f64);
            let y = y_of(summary.mean[ai][t] - summary.std[ai][t]);
            d.push_str(&format!(" L {x:.2},{y:.2}"));
        }
        d.push_str(" Z");
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"
        ));
    }
    for (ai, _) in summary.agent_ids.iter().enumerate() {
        let color = PALETTE[ai % PALETTE.len()];
        let pts: Vec<String> = (0..summary.t)
            .map(|t| format!("{:.2},{:.2}", x_of((t + 1) as f64), y_of(summary.mean[ai][t])))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            pts.join(" ")
        ));
    }

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph,
        ml + pw,
        mt + ph
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + ph
    ));
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let tx = 1.0 + frac * (t_max - 1.0);
        let x = x_of(tx);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n",
            mt + ph,
            mt + ph + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            mt + ph + 20.0,
            tx.round() as i64
        ));
        let yv = y_min + frac * (y_max - y_min);
        let y = y_of(yv);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{ml}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            ml - 9.0,
            y + 4.0,
            fmt_sig6((yv * 100.0).round() / 100.0)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">step</text>\n",
        ml + pw / 2.0,
        height - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">cumulative regret</text>\n",
        mt + ph / 2.0,
        mt + ph / 2.0
    ));

    // Legend.
    for (ai, id) in summary.agent_ids.iter().enumerate() {
        let color = PALETTE[ai % PALETTE.len()];
        let y = mt + 14.0 + ai as f64 * 20.0;
        let x = ml + pw + 16.0;
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            x + 22.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            x + 28.0,
            y + 4.0,
            xml_escape(id)
        ));
    }
    svg.push_str("</svg>\n");
    write_file(path, &svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::paper_preset;
    use crate::harness::summary::run_monte_carlo_seq;

    fn sample_summary() -> (MonteCarloSummary, Vec<TrialResult>) {
        let mut cfg = paper_preset(1);
        cfg.t = 30;
        cfg.n_trials = 3;
        cfg.agents.truncate(2);
        let run = run_monte_carlo_seq(&cfg, 1).unwrap();
        (run.summary, run.trials)
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(1.0), "1");
        assert_eq!(fmt_sig6(123.456789), "123.457");
        assert_eq!(fmt_sig6(-0.000123456789), "-0.000123457");
        assert_eq!(fmt_sig6(1234567.0), "1234570");
    }

    #[test]
    fn csv_has_expected_shape_and_is_stable() {
        let (summary, _) = sample_summary();
        let dir = std::env::temp_dir().join(format!("larkit-report-{}", std::process::id()));
        let path = dir.join("summary.csv");
        export_csv(&summary, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let lines = String::from_utf8(first.clone()).unwrap().lines().count();
        assert_eq!(lines, 1 + summary.agent_ids.len() * summary.t);
        export_csv(&summary, &path).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn verify_accepts_own_exports() {
        let (summary, trials) = sample_summary();
        let dir = std::env::temp_dir().join(format!("larkit-verify-{}", std::process::id()));
        export_csv(&summary, &dir.join("summary.csv")).unwrap();
        export_trials_csv(&trials, &dir.join("trials.csv")).unwrap();
        let diff = verify_outputs(&dir).unwrap();
        assert!(diff <= 1e-9);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn verify_flags_tampered_summary() {
        let (summary, trials) = sample_summary();
        let dir = std::env::temp_dir().join(format!("larkit-tamper-{}", std::process::id()));
        export_csv(&summary, &dir.join("summary.csv")).unwrap();
        export_trials_csv(&trials, &dir.join("trials.csv")).unwrap();
        let path = dir.join("summary.csv");
        let mut text = std::fs::read_to_string(&path).unwrap();
        // Bump one mean value.
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let parts: Vec<String> = lines[1].split(',').map(String::from).collect();
        let bumped: f64 = parts[2].parse::<f64>().unwrap() + 0.5;
        lines[1] = format!("{},{},{},{}", parts[0], parts[1], bumped, parts[3]);
        text = lines.join("\n");
        std::fs::write(&path, text).unwrap();
        assert!(verify_outputs(&dir).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    /// Minimal well-formedness scan: every opened tag closes in order.
    fn assert_well_formed_xml(text: &str) {
        let mut stack: Vec<String> = Vec::new();
        for (i, c) in text.char_indices() {
            if c != '<' {
                continue;
            }
            let rest = &text[i + 1..];
            if let Some(end) = rest.find('>') {
                let tag = &rest[..end];
                if tag.starts_with('?') || tag.starts_with('!') {
                    continue;
                }
                if let Some(name) = tag.strip_prefix('/') {
                    let open = stack.pop().unwrap_or_else(|| panic!("unmatched </{name}>"));
                    assert_eq!(open, name.trim(), "mismatched closing tag");
                } else if !tag.ends_with('/') {
                    let name = tag.split_whitespace().next().unwrap().to_string();
                    stack.push(name);
                }
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    #[test]
    fn svg_is_well_formed() {
        let (summary, _) = sample_summary();
        let dir = std::env::temp_dir().join(format!("larkit-svg-{}", std::process::id()));
        let path = dir.join("curves.svg");
        emit_svg(&summary, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert_well_formed_xml(&text);
        // One band path and one polyline per agent.
        assert_eq!(text.matches("<polyline").count(), summary.agent_ids.len());
        std::fs::remove_dir_all(&dir).ok();
    }
}
