//! Flat-file output: CSV with 17 significant digits (full f64 round-trip)
//! and JSON reports.  Data files carry no timestamps; the run manifest does.

use std::io::Write;

use crate::asymptotics::AsymptoticsReport;
use crate::ef::EfStaticFields;
use crate::error::{Error, Result};
use crate::perturb::InitialDataSet;
use crate::sweep::SweepResult;
use crate::theorem::TheoremReport;
use crate::tov::StaticProfile;

/// 17 significant digits; parses back to the identical f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub const PROFILE_HEADER: &str = "r,rho,m,lambda,nu,a,b";
pub const EF_HEADER: &str = "r,a,b,M,V,v_shift";
pub const IDATA_HEADER: &str = "r,M0,V0,a0,b0,a1,av";
pub const SWEEP_HEADER: &str =
    "k,r_star,delta,h,delta_over_h,hypothesis_met,min_a0,band_min_av,annulus_sup_av,C1,C4_prefactor,band_bound";

fn write_row(w: &mut impl Write, cells: &[f64]) -> Result<()> {
    let row: Vec<String> = cells.iter().map(|&x| fmt17(x)).collect();
    writeln!(w, "{}", row.join(",")).map_err(Error::from)
}

/// `r,rho,m,lambda,nu,a,b`, one node per line.
pub fn write_profile_csv(w: &mut impl Write, profile: &StaticProfile) -> Result<()> {
    writeln!(w, "{PROFILE_HEADER}")?;
    let a = profile.a_values();
    let b = profile.b_values();
    for (i, &r) in profile.grid().nodes().iter().enumerate() {
        write_row(
            w,
            &[r, profile.rho()[i], profile.m()[i], profile.lambda()[i], profile.nu()[i], a[i], b[i]],
        )?;
    }
    Ok(())
}

/// `r,a,b,M,V,v_shift`, one node per line.
pub fn write_ef_csv(w: &mut impl Write, fields: &EfStaticFields) -> Result<()> {
    writeln!(w, "{EF_HEADER}")?;
    for (i, &r) in fields.grid().nodes().iter().enumerate() {
        write_row(
            w,
            &[
                r,
                fields.a()[i],
                fields.b()[i],
                fields.m_norm()[i],
                fields.v_norm()[i],
                fields.v_shift()[i],
            ],
        )?;
    }
    Ok(())
}

/// `r,M0,V0,a0,b0,a1,av`, one node per line.
pub fn write_idata_csv(w: &mut impl Write, data: &InitialDataSet) -> Result<()> {
    writeln!(w, "{IDATA_HEADER}")?;
    for (i, &r) in data.grid().nodes().iter().enumerate() {
        write_row(
            w,
            &[r, data.m0()[i], data.v0()[i], data.a0()[i], data.b0()[i], data.a1()[i], data.av()[i]],
        )?;
    }
    Ok(())
}

/// One aggregate row per sweep point, in sweep order.
pub fn write_sweep_csv(w: &mut impl Write, sweep: &SweepResult) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for p in &sweep.points {
        let r = &p.report;
        let row = [
            fmt17(sweep.k),
            fmt17(sweep.r_star),
            fmt17(p.delta),
            fmt17(p.h),
            fmt17(r.delta_over_h),
            (r.hypothesis_met as u8).to_string(),
            fmt17(r.min_a0),
            fmt17(r.band_min_av),
            fmt17(r.annulus_sup_av),
            fmt17(r.c1),
            fmt17(r.c4_prefactor),
            fmt17(r.band_bound),
        ];
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_asymptotics_json(w: &mut impl Write, report: &AsymptoticsReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, report)
        .map_err(|e| Error::Parse(format!("serialize asymptotics: {e}")))?;
    writeln!(w)?;
    Ok(())
}

pub fn write_theorem_json(w: &mut impl Write, report: &TheoremReport) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, report)
        .map_err(|e| Error::Parse(format!("serialize report: {e}")))?;
    writeln!(w)?;
    Ok(())
}

pub fn write_sweep_json(w: &mut impl Write, sweep: &SweepResult) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, sweep)
        .map_err(|e| Error::Parse(format!("serialize sweep: {e}")))?;
    writeln!(w)?;
    Ok(())
}

/// A parsed numeric CSV: header cells and rows of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("no column named {name}")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// Parse a CSV produced by the writers above (all-numeric body).
pub fn read_csv(text: &str) -> Result<CsvTable> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let mut row = Vec::with_capacity(header.len());
        for cell in line.split(',') {
            row.push(cell.trim().parse::<f64>().map_err(|e| {
                Error::Parse(format!("line {}: bad number {cell:?}: {e}", lineno + 2))
            })?);
        }
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "line {}: {} cells, expected {}",
                lineno + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fmt17_round_trips_simple_values() {
        for x in [0.0, 1.0, -1.5, std::f64::consts::PI, 1e-300, 4.0 / 7.0] {
            let back: f64 = fmt17(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn csv_round_trip() {
        let text = format!("x,y\n{},{}\n{},{}\n", fmt17(1.0 / 3.0), fmt17(-2.5e-7), fmt17(7.0), fmt17(0.0));
        let table = read_csv(&text).unwrap();
        assert_eq!(table.header, vec!["x", "y"]);
        assert_eq!(table.rows[0][0], 1.0 / 3.0);
        assert_eq!(table.rows[0][1], -2.5e-7);
        assert_eq!(table.column("y").unwrap()[1], 0.0);
        assert!(table.column("z").is_err());
    }

    #[test]
    fn malformed_csv_is_rejected() {
        assert!(read_csv("").is_err());
        assert!(read_csv("a,b\n1.0\n").is_err());
        assert!(read_csv("a,b\n1.0,abc\n").is_err());
    }

    proptest! {
        #[test]
        fn fmt17_round_trips_all_finite(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = fmt17(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
