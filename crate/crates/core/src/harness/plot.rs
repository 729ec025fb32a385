//! Log-log SVG line plots of mean RMS against RNP.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::evaluate::{read_records, ExperimentRecord};
use crate::evolution::NoiseKind;
use crate::Result;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn color(kind: NoiseKind) -> &'static str {
    match kind {
        NoiseKind::None => "#555555",
        NoiseKind::PureNoise => "#1f77b4",
        NoiseKind::Decoherence => "#2ca02c",
        NoiseKind::ComplexNoise => "#d62728",
    }
}

/// One plot per register size, keyed by `n_qubits`.
pub fn plots_from_csv(text: &str) -> Result<Vec<(usize, String)>> {
    Ok(plot_records(&read_records(text)?))
}

pub fn plot_records(records: &[ExperimentRecord]) -> Vec<(usize, String)> {
    let mut by_n: BTreeMap<usize, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_ok() && r.rms_mean.is_some_and(|m| m > 0.0)) {
        by_n.entry(r.n_qubits).or_default().push(r);
    }
    by_n.into_iter().map(|(n, rows)| (n, render(n, &rows))).collect()
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    /// Whole decades covering `[min, max]`.
    fn covering(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v.log10());
            hi = hi.max(v.log10());
        }
        let (lo, mut hi) = (lo.floor(), hi.ceil());
        if hi <= lo {
            hi = lo + 1.0;
        }
        Self { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        ((v.log10() - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
    }
}

fn render(n: usize, rows: &[&ExperimentRecord]) -> String {
    let noisy: Vec<&&ExperimentRecord> = rows.iter().filter(|r| r.noise_kind != NoiseKind::None && r.rnp > 0.0).collect();
    let baseline = rows.iter().find(|r| r.noise_kind == NoiseKind::None).and_then(|r| r.rms_mean);
    let x = Axis::covering(noisy.iter().map(|r| r.rnp).chain(if noisy.is_empty() { Some(1.0) } else { None }));
    let y = Axis::covering(
        rows.iter()
            .flat_map(|r| {
                let m = r.rms_mean.unwrap_or(1.0);
                let se = r.std_error().unwrap_or(0.0);
                [m, if m - se > 0.0 { m - se } else { m }, m + se]
            }),
    );
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + x.frac(v) * pw;
    let py = |v: f64| TOP + (1.0 - y.frac(v)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">RMS vs RNP, {n} qubits</text>"#,
        LEFT + pw / 2.0
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for e in x.lo as i32..=x.hi as i32 {
        let xv = px(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{xv:.2}" y1="{TOP}" x2="{xv:.2}" y2="{:.2}" stroke="#dddddd"/><text x="{xv:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"##,
            TOP + ph,
            TOP + ph + 18.0
        );
    }
    for e in y.lo as i32..=y.hi as i32 {
        let yv = py(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yv:.2}" x2="{:.2}" y2="{yv:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            yv + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">RNP</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">mean RMS</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    if let Some(b) = baseline {
        let yv = py(b);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yv:.2}" x2="{:.2}" y2="{yv:.2}" stroke="{}" stroke-dasharray="6 4"/>"##,
            LEFT + pw,
            color(NoiseKind::None)
        );
    }
    let mut legend = Vec::new();
    for kind in NoiseKind::NOISY {
        let mut pts: Vec<&&&ExperimentRecord> = noisy.iter().filter(|r| r.noise_kind == kind).collect();
        if pts.is_empty() {
            continue;
        }
        pts.sort_by(|a, b| a.rnp.total_cmp(&b.rnp));
        let c = color(kind);
        let band: Vec<String> = pts
            .iter()
            .map(|r| {
                let m = r.rms_mean.unwrap_or(0.0);
                format!("{:.2},{:.2}", px(r.rnp), py(m + r.std_error().unwrap_or(0.0)))
            })
            .chain(pts.iter().rev().map(|r| {
                let m = r.rms_mean.unwrap_or(0.0);
                let lo = m - r.std_error().unwrap_or(0.0);
                format!("{:.2},{:.2}", px(r.rnp), py(if lo > 0.0 { lo } else { m }))
            }))
            .collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{c}" fill-opacity="0.18" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.rnp), py(r.rms_mean.unwrap_or(0.0))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for p in &line {
            let (cx, cy) = p.split_once(',').expect("formatted above");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{c}"/>"#);
        }
        legend.push((kind.as_str(), c, false));
    }
    if baseline.is_some() {
        legend.push(("noiseless", color(NoiseKind::None), true));
    }
    for (i, (label, c, dashed)) in legend.iter().enumerate() {
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 14.0;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{c}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}">{label}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: usize, kind: NoiseKind, rnp: f64, mean: Option<f64>) -> ExperimentRecord {
        ExperimentRecord {
            n_qubits: n,
            noise_kind: kind,
            rnp,
            n_noise_draws: 32,
            rms_mean: mean,
            rms_std: mean.map(|m| 0.1 * m),
            seed: 1,
            params_hash: "h".into(),
            mean_noise_norm: Some(0.0),
            status: if mean.is_some() { "ok" } else { "error: x" }.into(),
        }
    }

    #[test]
    fn one_plot_per_size_with_one_line_per_kind() {
        let rows = vec![
            rec(2, NoiseKind::None, 0.0, Some(1e-7)),
            rec(2, NoiseKind::PureNoise, 5e-6, Some(1e-5)),
            rec(2, NoiseKind::PureNoise, 5e-5, Some(1e-4)),
            rec(2, NoiseKind::ComplexNoise, 5e-5, Some(3e-4)),
            rec(4, NoiseKind::Decoherence, 5e-5, Some(2e-4)),
            rec(6, NoiseKind::Decoherence, 5e-5, None),
        ];
        let plots = plot_records(&rows);
        assert_eq!(plots.iter().map(|p| p.0).collect::<Vec<_>>(), vec![2, 4]);
        let two = &plots[0].1;
        assert!(two.starts_with("<svg") && two.ends_with("</svg>\n"));
        assert_eq!(two.matches("<polyline").count(), 2);
        assert!(two.contains("stroke-dasharray"));
    }

    #[test]
    fn plots_are_a_function_of_the_csv() {
        let rows = vec![
            rec(2, NoiseKind::PureNoise, 5e-6, Some(1e-5)),
            rec(2, NoiseKind::PureNoise, 5e-4, Some(1e-3)),
        ];
        let mut buf = Vec::new();
        super::super::write_records(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(plots_from_csv(&text).unwrap(), plots_from_csv(&text).unwrap());
        assert_eq!(plots_from_csv(&text).unwrap(), plot_records(&rows));
    }
}
