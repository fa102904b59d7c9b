use serde::Serialize;

/// How `mutex` locks adjust the holder's priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MutexMode {
    #[default]
    Plain,
    Inheritance,
    Ceiling,
}

impl std::str::FromStr for MutexMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(MutexMode::Plain),
            "inheritance" => Ok(MutexMode::Inheritance),
            "ceiling" => Ok(MutexMode::Ceiling),
            other => Err(format!("unknown mutex mode `{other}`")),
        }
    }
}

/// Scheduler configuration shared by the detector and the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectorConfig {
    pub mutex_mode: MutexMode,
    /// Time slicing between equal-priority ready tasks.
    pub round_robin: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { mutex_mode: MutexMode::Plain, round_robin: true }
    }
}
