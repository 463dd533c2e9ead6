use std::fmt::Write as _;

use serde::Serialize;

/// Loss summary of one completed epoch. Loss fields are means over the
/// epoch's samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub recon_recovered: Option<f64>,
    pub recon_switched: Option<f64>,
    pub cls: Option<f64>,
    pub total: f64,
    /// Accuracy (classification) or RMSE (regression) on the validation split.
    pub val_metric: Option<f64>,
    pub val_loss: Option<f64>,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
    /// Whether the run decoded switched pairs; controls the CSV layout.
    pub switching: bool,
    /// Epoch whose parameters were returned, for early-stopped runs.
    pub best_epoch: Option<usize>,
}

fn cell(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        write!(out, "{v}").unwrap();
    }
}

impl TrainLog {
    pub fn new(switching: bool) -> Self {
        Self {
            records: Vec::new(),
            switching,
            best_epoch: None,
        }
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// CSV export. Wall-clock times are left out so that identical runs give
    /// identical files; `recon_switched` is omitted when switching was off.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,recon_recovered");
        if self.switching {
            out.push_str(",recon_switched");
        }
        out.push_str(",cls,total,val_metric\n");
        for r in &self.records {
            write!(out, "{}", r.epoch).unwrap();
            cell(&mut out, r.recon_recovered);
            if self.switching {
                cell(&mut out, r.recon_switched);
            }
            cell(&mut out, r.cls);
            cell(&mut out, Some(r.total));
            cell(&mut out, r.val_metric);
            out.push('\n');
        }
        out
    }
}
