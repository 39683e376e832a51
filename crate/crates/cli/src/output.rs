//! Output helpers: provenance headers and number formatting. CSV and
//! JSON carry full precision (17 significant digits); text tables are
//! rounded to 4 decimals.

use serde::Serialize;

/// 17 significant digits, enough to round-trip any f64.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

/// Provenance attached to every output: tool version, the fully resolved
/// configuration, and the seed where one applies.
#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(command: &str, config: impl Serialize, seed: Option<u64>) -> Self {
        Provenance {
            tool: "lpanova",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            seed,
        }
    }

    /// `# key: value` comment lines for text and CSV outputs.
    pub fn comment_header(&self) -> String {
        let mut s = format!(
            "# {} {} {}\n# config: {}\n",
            self.tool, self.version, self.command, self.config
        );
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed: {seed}\n"));
        }
        s
    }
}

/// Wrap a result with its provenance for JSON output.
pub fn json_with_provenance(provenance: &Provenance, result: impl Serialize) -> String {
    #[derive(Serialize)]
    struct Envelope<'a, T: Serialize> {
        provenance: &'a Provenance,
        result: T,
    }
    serde_json::to_string_pretty(&Envelope {
        provenance,
        result,
    })
    .expect("result serializes")
}
