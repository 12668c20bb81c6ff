use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sal,
    Plain,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sal => "sal",
            Method::Plain => "plain",
        }
    }
}

/// Early-stopping/evaluation unit: outer steps for the hierarchical method,
/// epochs for plain training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Step,
    Epoch,
}

impl UnitKind {
    pub fn name(self) -> &'static str {
        match self {
            UnitKind::Step => "step",
            UnitKind::Epoch => "epoch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Direct,
    Guide,
}

impl PhaseKind {
    /// Loss the phase optimizes.
    pub fn loss_name(self) -> &'static str {
        match self {
            PhaseKind::Direct => "ce",
            PhaseKind::Guide => "mse",
        }
    }
}

/// Identity of one training phase, used for transcription checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhaseTag {
    pub kind: PhaseKind,
    pub floor: usize,
}

/// Full loss trajectory of one phase.
#[derive(Debug, Clone)]
pub struct PhaseRecord {
    pub floor: usize,
    pub kind: PhaseKind,
    pub epoch_losses: Vec<f64>,
}

impl PhaseRecord {
    pub fn tag(&self) -> PhaseTag {
        PhaseTag { kind: self.kind, floor: self.floor }
    }

    pub fn final_loss(&self) -> f64 {
        *self.epoch_losses.last().expect("phases run at least one epoch")
    }
}

/// All phases of one outer step, in execution order.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub phases: Vec<PhaseRecord>,
}

impl StepRecord {
    pub fn tags(&self) -> Vec<PhaseTag> {
        self.phases.iter().map(PhaseRecord::tag).collect()
    }
}

/// End-of-phase loss of one floor within a unit; `kind` tells whether it is
/// a CE (direct) or MSE (guidance) value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FloorLoss {
    pub floor: usize,
    pub kind: PhaseKind,
    pub loss: f64,
}

/// One evaluation-unit row of a run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub unit_index: u32,
    pub wall_clock_s: f64,
    /// Mean CE of the monitored model over its final direct epoch this unit.
    pub train_loss: f64,
    pub val_acc: f64,
    pub val_loss: f64,
    pub test_acc: f64,
    pub floor_losses: Vec<FloorLoss>,
}

/// Checkpoint with the best monitored validation metric.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BestCheckpoint {
    pub unit_index: u32,
    pub val_acc: f64,
    pub val_loss: f64,
    pub test_acc: f64,
}

/// Complete metric history of one run.
#[derive(Debug, Clone)]
pub struct RunHistory {
    pub method: Method,
    pub unit_kind: UnitKind,
    pub records: Vec<RunRecord>,
    pub best: BestCheckpoint,
    pub total_wall_clock_s: f64,
    pub stopped_early: bool,
    /// Phase sequence per step; empty for plain runs.
    pub step_phases: Vec<Vec<PhaseTag>>,
}
