use serde::{Deserialize, Serialize};

use crate::channels::{KrausChannel, MapKind};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// On-disk channel: each Kraus operator is a list of rows of `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub label: String,
    pub dim_in: usize,
    pub dim_out: usize,
    #[serde(default = "default_kind")]
    pub kind: String,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

fn default_kind() -> String {
    "trace_preserving".into()
}

fn kind_name(kind: MapKind) -> &'static str {
    match kind {
        MapKind::TracePreserving => "trace_preserving",
        MapKind::Unital => "unital",
        MapKind::SupportDeficient => "support_deficient",
    }
}

impl From<&KrausChannel> for ChannelJson {
    fn from(ch: &KrausChannel) -> Self {
        let kraus = ch
            .kraus()
            .iter()
            .map(|k| {
                (0..k.rows())
                    .map(|r| (0..k.cols()).map(|c| [k[(r, c)].re, k[(r, c)].im]).collect())
                    .collect()
            })
            .collect();
        Self {
            label: ch.label().to_string(),
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            kind: kind_name(ch.kind()).into(),
            kraus,
        }
    }
}

impl TryFrom<ChannelJson> for KrausChannel {
    type Error = Error;

    fn try_from(js: ChannelJson) -> Result<Self> {
        let kraus = js
            .kraus
            .iter()
            .enumerate()
            .map(|(m, rows)| {
                if rows.len() != js.dim_out || rows.iter().any(|r| r.len() != js.dim_in) {
                    return Err(Error::ShapeMismatch(format!(
                        "Kraus operator {m} is not {}x{}",
                        js.dim_out, js.dim_in
                    )));
                }
                let data = rows.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
                ComplexMatrix::from_vec(js.dim_out, js.dim_in, data)
            })
            .collect::<Result<Vec<_>>>()?;
        match js.kind.as_str() {
            "trace_preserving" => KrausChannel::new(kraus, js.label),
            "unital" => KrausChannel::from_parts(kraus, js.label, MapKind::Unital),
            "support_deficient" => KrausChannel::from_parts(kraus, js.label, MapKind::SupportDeficient),
            other => Err(Error::Parse(format!("unknown channel kind `{other}`"))),
        }
    }
}

pub fn channel_to_json(ch: &KrausChannel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ChannelJson::from(ch))?)
}

pub fn channel_from_json(text: &str) -> Result<KrausChannel> {
    let js: ChannelJson = serde_json::from_str(text)?;
    js.try_into()
}
