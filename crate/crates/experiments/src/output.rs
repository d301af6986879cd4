//! CSV output. UTF-8, `\n` line endings, floats with 17 significant digits.
//!
//! A campaign writes `<campaign>.csv` into the output directory and its raw
//! scans as `<campaign>_scans/scan_<index>.csv`, listed in
//! `<campaign>_scans/manifest.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use spinor_phase::phase::ScanResult;

use crate::campaign::{CampaignResult, ScanRecord, TomographyRow};
use crate::config::Campaign;
use crate::ExperimentError;

pub const CAMPAIGN_HEADER: &str = "r0,two_xi_deg,two_delta_deg,kind,phi_extracted_rad,phi_sigma_rad,phi_predicted_rad";
pub const SCAN_HEADER: &str = "eta_rad,intensity,counts";
pub const TOMOGRAPHY_HEADER: &str = "r0,rx,ry,rz,sigma_rx,sigma_ry,sigma_rz,r0_estimated,r0_sigma";
pub const MANIFEST_HEADER: &str = "index,file,kind,role,r0,two_xi_deg,two_delta_deg";

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(fields: &[f64]) -> String {
    fields.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(",")
}

pub fn campaign_csv(result: &CampaignResult) -> String {
    let mut out = String::new();
    writeln!(out, "{CAMPAIGN_HEADER}").unwrap();
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_float(r.r0),
            format_float(r.two_xi_deg),
            format_float(r.two_delta_deg),
            r.kind.name(),
            format_float(r.phi_extracted),
            format_float(r.phi_sigma),
            format_float(r.phi_predicted)
        )
        .unwrap();
    }
    out
}

pub fn tomography_csv(rows: &[TomographyRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{TOMOGRAPHY_HEADER}").unwrap();
    for t in rows {
        let e = &t.estimate;
        let fields = [
            t.r0,
            e.rx,
            e.ry,
            e.rz,
            e.sigma[0],
            e.sigma[1],
            e.sigma[2],
            t.r0_estimated,
            t.r0_sigma,
        ];
        writeln!(out, "{}", join(&fields)).unwrap();
    }
    out
}

/// `counts` is left empty for noiseless scans.
pub fn scan_csv(scan: &ScanResult) -> String {
    let mut out = String::new();
    writeln!(out, "{SCAN_HEADER}").unwrap();
    for (k, (&eta, &i)) in scan.eta_grid.iter().zip(&scan.intensities).enumerate() {
        let counts = scan.counts.as_ref().map(|c| c[k].to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", format_float(eta), format_float(i), counts).unwrap();
    }
    out
}

pub fn scan_file_name(index: usize) -> String {
    format!("scan_{index}.csv")
}

pub fn manifest_csv(scans: &[ScanRecord]) -> String {
    let mut out = String::new();
    writeln!(out, "{MANIFEST_HEADER}").unwrap();
    for (i, s) in scans.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{}",
            scan_file_name(i),
            s.kind.name(),
            s.role.name(),
            join(&[s.r0, s.two_xi_deg, s.two_delta_deg])
        )
        .unwrap();
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(path).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn campaign_file(dir: &Path, result: &CampaignResult) -> PathBuf {
    dir.join(format!("{}.csv", result.campaign.name()))
}

pub fn scans_dir(dir: &Path, result: &CampaignResult) -> PathBuf {
    dir.join(format!("{}_scans", result.campaign.name()))
}

/// Write all CSV files for `result` under `dir` and return their paths.
pub fn write_result(dir: &Path, result: &CampaignResult) -> Result<Vec<PathBuf>, ExperimentError> {
    create_dir(dir)?;
    let main = campaign_file(dir, result);
    let body = match result.campaign {
        Campaign::Tomography => tomography_csv(&result.tomography),
        _ => campaign_csv(result),
    };
    write(&main, &body)?;
    let mut written = vec![main];
    if !result.scans.is_empty() {
        let sub = scans_dir(dir, result);
        create_dir(&sub)?;
        for (i, s) in result.scans.iter().enumerate() {
            let path = sub.join(scan_file_name(i));
            write(&path, &scan_csv(&s.scan))?;
            written.push(path);
        }
        let manifest = sub.join("manifest.csv");
        write(&manifest, &manifest_csv(&result.scans))?;
        written.push(manifest);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        let v = std::f64::consts::PI / 8.0;
        assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
    }
}
