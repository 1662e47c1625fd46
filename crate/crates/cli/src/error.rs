use matchkit_scenarios::ScenarioError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{scenario} run with seed {seed}, method {method}: {source}")]
    Run {
        scenario: &'static str,
        method: &'static str,
        seed: u64,
        #[source]
        source: ScenarioError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
