//! Short content digests used to tie reports to their inputs.

use sha2::{Digest, Sha256};

/// Incremental digest over tagged numeric and string fields.
#[derive(Clone, Default)]
pub struct Digester {
    hasher: Sha256,
}

impl Digester {
    pub fn new(tag: &str) -> Self {
        let mut d = Self { hasher: Sha256::new() };
        d.str(tag);
        d
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.hasher.update((s.len() as u64).to_le_bytes());
        self.hasher.update(s.as_bytes());
        self
    }

    pub fn u64(&mut self, x: u64) -> &mut Self {
        self.hasher.update(x.to_le_bytes());
        self
    }

    pub fn f64(&mut self, x: f64) -> &mut Self {
        self.u64(x.to_bits())
    }

    pub fn f64s(&mut self, xs: &[f64]) -> &mut Self {
        self.u64(xs.len() as u64);
        for &x in xs {
            self.f64(x);
        }
        self
    }

    /// First 16 hex digits of the SHA-256.
    pub fn finish(&self) -> String {
        let out = self.hasher.clone().finalize();
        hex::encode(&out[..8])
    }
}

pub fn digest_str(tag: &str, body: &str) -> String {
    Digester::new(tag).str(body).finish()
}
