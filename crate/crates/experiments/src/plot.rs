//! SVG renderings of campaign results and raw scans. Output only; nothing
//! here feeds back into the CSV files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use spinor_phase::phase::ScanResult;

use crate::campaign::{CampaignResult, ScanRole};
use crate::output::scans_dir;
use crate::ExperimentError;

const SIZE: (u32, u32) = (800, 600);

/// (r₀, Φ, σ, predicted) points keyed by (kind, 2ξ, 2δ) in micro-degrees.
type Series = BTreeMap<(String, i64, i64), Vec<(f64, f64, f64, f64)>>;

fn plot_err<E: std::fmt::Display>(e: E) -> ExperimentError {
    ExperimentError::Plot(e.to_string())
}

fn padded(lo: f64, hi: f64) -> std::ops::Range<f64> {
    let pad = 0.05 * (hi - lo).max(1e-3);
    (lo - pad)..(hi + pad)
}

/// Φ against r₀, one series per (kind, 2ξ, 2δ): measured points with ±σ bars
/// and the predicted values joined by a line.
pub fn plot_phase_vs_purity(result: &CampaignResult, path: &Path) -> Result<(), ExperimentError> {
    let mut series: Series = BTreeMap::new();
    for r in &result.rows {
        let key = (
            r.kind.name().to_string(),
            (r.two_xi_deg * 1e6) as i64,
            (r.two_delta_deg * 1e6) as i64,
        );
        series
            .entry(key)
            .or_default()
            .push((r.r0, r.phi_extracted, r.phi_sigma, r.phi_predicted));
    }
    let values = result.rows.iter().flat_map(|r| {
        [
            r.phi_extracted - r.phi_sigma,
            r.phi_extracted + r.phi_sigma,
            r.phi_predicted,
        ]
    });
    let (lo, hi) = values.fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{} campaign", result.campaign), ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..1.05, padded(lo, hi))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("r0")
        .y_desc("phase (rad)")
        .draw()
        .map_err(plot_err)?;

    for (i, ((kind, two_xi, two_delta), mut pts)) in series.into_iter().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let color = Palette99::pick(i).to_rgba();
        let label = format!(
            "{kind} 2ξ={:.2}° 2δ={:.2}°",
            two_xi as f64 / 1e6,
            two_delta as f64 / 1e6
        );
        chart
            .draw_series(LineSeries::new(pts.iter().map(|p| (p.0, p.3)), color.stroke_width(1)))
            .map_err(plot_err)?
            .label(label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        chart
            .draw_series(pts.iter().map(|p| Circle::new((p.0, p.1), 3, color.filled())))
            .map_err(plot_err)?;
        chart
            .draw_series(
                pts.iter()
                    .map(|p| PathElement::new(vec![(p.0, p.1 - p.2), (p.0, p.1 + p.2)], color)),
            )
            .map_err(plot_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Recorded intensity against η.
pub fn plot_scan(scan: &ScanResult, title: &str, path: &Path) -> Result<(), ExperimentError> {
    let observed = scan.observed();
    let (lo, hi) = observed
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let eta_max = scan.eta_grid.last().copied().unwrap_or(0.0).max(1e-3);

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(padded(0.0, eta_max), padded(lo.min(hi), hi.max(lo)))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("eta (rad)")
        .y_desc("intensity")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(
            scan.eta_grid.iter().copied().zip(scan.intensities.iter().copied()),
            BLUE,
        ))
        .map_err(plot_err)?;
    chart
        .draw_series(
            scan.eta_grid
                .iter()
                .zip(&observed)
                .map(|(&x, &y)| Circle::new((x, y), 3, BLACK.filled())),
        )
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// `<campaign>.svg` plus one SVG per multi-point measurement scan.
pub fn write_plots(dir: &Path, result: &CampaignResult) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut written = Vec::new();
    if !result.rows.is_empty() {
        let path = dir.join(format!("{}.svg", result.campaign.name()));
        plot_phase_vs_purity(result, &path)?;
        written.push(path);
    }
    let sub = scans_dir(dir, result);
    for (i, s) in result.scans.iter().enumerate() {
        if s.role != ScanRole::Measurement || s.scan.len() < 2 {
            continue;
        }
        let path = sub.join(format!("scan_{i}.svg"));
        let title = format!(
            "{} r0={:.3} 2ξ={:.2}° 2δ={:.2}°",
            s.kind.name(),
            s.r0,
            s.two_xi_deg,
            s.two_delta_deg
        );
        plot_scan(&s.scan, &title, &path)?;
        written.push(path);
    }
    Ok(written)
}
