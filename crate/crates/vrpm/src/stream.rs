//! `.vrpm` token files.
//!
//! Binary layout, little-endian: magic `VRPM`, `u32` version (1), `u32`
//! n_bins, `u64` token count, then one `u16` per token. The text debug form
//! is a header line `# vrpm-tokens version=1 n_bins=N` followed by one
//! decimal token id per line; blank lines and other `#` comments are skipped.

use std::io::{Read, Write};

use vrpm_core::grid::MAX_BINS;
use vrpm_core::TokenStream;

pub const MAGIC: [u8; 4] = *b"VRPM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

const TEXT_HEADER: &str = "# vrpm-tokens";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("byte {offset}: bad magic {found:02x?}")]
    BadMagic { offset: usize, found: Vec<u8> },
    #[error("byte {offset}: unsupported version {version}")]
    BadVersion { offset: usize, version: u32 },
    #[error("byte {offset}: grid resolution {n_bins} outside [2, {MAX_BINS}]")]
    BadResolution { offset: usize, n_bins: u32 },
    #[error("byte {offset}: truncated, need {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("byte {offset}: {extra} trailing bytes after the last token")]
    TrailingBytes { offset: usize, extra: usize },
    #[error("byte {offset}: token {token} outside the vocabulary of {size}")]
    BadToken {
        offset: usize,
        token: u16,
        size: usize,
    },
    #[error("line {line}: {message}")]
    Text { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn check_bins(n_bins: u32, offset: usize) -> Result<usize, FormatError> {
    if !(2..=MAX_BINS).contains(&n_bins) {
        return Err(FormatError::BadResolution { offset, n_bins });
    }
    Ok(n_bins as usize + 4)
}

pub fn to_bytes(stream: &TokenStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 2 * stream.tokens.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&stream.n_bins.to_le_bytes());
    out.extend_from_slice(&(stream.tokens.len() as u64).to_le_bytes());
    for t in &stream.tokens {
        out.extend_from_slice(&t.to_le_bytes());
    }
    out
}

pub fn write_stream(stream: &TokenStream, sink: &mut impl Write) -> std::io::Result<()> {
    sink.write_all(&to_bytes(stream))
}

pub fn read_stream(source: &mut impl Read) -> Result<TokenStream, FormatError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

pub fn from_bytes(bytes: &[u8]) -> Result<TokenStream, FormatError> {
    let field = |offset: usize, len: usize| -> Result<&[u8], FormatError> {
        bytes
            .get(offset..offset + len)
            .ok_or_else(|| FormatError::Truncated {
                offset: bytes.len(),
                needed: offset + len - bytes.len(),
            })
    };
    let magic = field(0, 4)?;
    if magic != MAGIC {
        return Err(FormatError::BadMagic {
            offset: 0,
            found: magic.to_vec(),
        });
    }
    let version = u32::from_le_bytes(field(4, 4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(FormatError::BadVersion { offset: 4, version });
    }
    let n_bins = u32::from_le_bytes(field(8, 4)?.try_into().expect("4 bytes"));
    let size = check_bins(n_bins, 8)?;
    let count = u64::from_le_bytes(field(12, 8)?.try_into().expect("8 bytes"));
    let body = &bytes[HEADER_LEN..];
    let needed = count.saturating_mul(2);
    if (body.len() as u64) < needed {
        return Err(FormatError::Truncated {
            offset: bytes.len(),
            needed: usize::try_from(needed - body.len() as u64).unwrap_or(usize::MAX),
        });
    }
    let needed = needed as usize;
    if body.len() > needed {
        return Err(FormatError::TrailingBytes {
            offset: HEADER_LEN + needed,
            extra: body.len() - needed,
        });
    }
    let mut tokens = Vec::with_capacity(count as usize);
    for (i, pair) in body.chunks_exact(2).enumerate() {
        let token = u16::from_le_bytes([pair[0], pair[1]]);
        if token as usize >= size {
            return Err(FormatError::BadToken {
                offset: HEADER_LEN + 2 * i,
                token,
                size,
            });
        }
        tokens.push(token);
    }
    Ok(TokenStream { n_bins, tokens })
}

pub fn to_text(stream: &TokenStream) -> String {
    let mut out = format!("{TEXT_HEADER} version={VERSION} n_bins={}\n", stream.n_bins);
    for t in &stream.tokens {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    out
}

pub fn from_text(text: &str) -> Result<TokenStream, FormatError> {
    let err = |line: usize, message: String| FormatError::Text { line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "missing header".into()))?;
    let rest = header
        .strip_prefix(TEXT_HEADER)
        .ok_or_else(|| err(1, format!("header must start with {TEXT_HEADER:?}")))?;
    let (mut version, mut n_bins) = (None, None);
    for kv in rest.split_whitespace() {
        match kv.split_once('=') {
            Some(("version", v)) => version = v.parse::<u32>().ok(),
            Some(("n_bins", v)) => n_bins = v.parse::<u32>().ok(),
            _ => return Err(err(1, format!("unexpected header field {kv:?}"))),
        }
    }
    match version {
        Some(VERSION) => {}
        Some(v) => return Err(err(1, format!("unsupported version {v}"))),
        None => return Err(err(1, "missing version".into())),
    }
    let n_bins = n_bins.ok_or_else(|| err(1, "missing n_bins".into()))?;
    let size = check_bins(n_bins, 0).map_err(|e| err(1, e.to_string()))?;
    let mut tokens = Vec::new();
    for (i, line) in lines {
        let s = line.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let token: u16 = s
            .parse()
            .map_err(|_| err(i + 1, format!("bad token id {s:?}")))?;
        if token as usize >= size {
            return Err(err(
                i + 1,
                format!("token {token} outside the vocabulary of {size}"),
            ));
        }
        tokens.push(token);
    }
    Ok(TokenStream { n_bins, tokens })
}

/// Reads either format, telling them apart by the binary magic.
pub fn parse_any(bytes: &[u8]) -> Result<TokenStream, FormatError> {
    if bytes.starts_with(TEXT_HEADER.as_bytes()) {
        let text = std::str::from_utf8(bytes).map_err(|e| FormatError::Text {
            line: bytes[..e.valid_up_to()]
                .iter()
                .filter(|&&b| b == b'\n')
                .count()
                + 1,
            message: "not valid UTF-8".into(),
        })?;
        from_text(text)
    } else {
        from_bytes(bytes)
    }
}
