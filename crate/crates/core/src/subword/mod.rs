//! Joint byte-pair encoding.
//!
//! Words are split into characters with an end-of-word marker glued to the
//! last character (`low` -> `l o w</w>`), and learned merges are replayed in
//! order. Input tokens must not contain the marker string; 13a tokens never
//! do because `<` is always split off.

mod train;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use train::{bpe_train, word_frequencies, DEFAULT_MERGES};

pub const END_OF_WORD: &str = "</w>";

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    vocab: BTreeSet<String>,
    marker: String,
    ranks: HashMap<(String, String), usize>,
}

pub(crate) fn initial_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut out: Vec<String> = chars.iter().map(|c| c.to_string()).collect();
    if let Some(last) = out.last_mut() {
        last.push_str(END_OF_WORD);
    }
    out
}

impl BpeModel {
    pub(crate) fn from_parts(merges: Vec<(String, String)>, vocab: BTreeSet<String>, marker: String) -> Self {
        let ranks = merges.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        BpeModel {
            merges,
            vocab,
            marker,
            ranks,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn marker(&self) -> &str {
        &self.marker
    }

    /// Segment one word by replaying merges in rank order.
    pub fn encode_word(&self, word: &str) -> Vec<String> {
        let mut syms = initial_symbols(word);
        loop {
            let best = syms
                .windows(2)
                .filter_map(|p| self.ranks.get(&(p[0].clone(), p[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && &syms[i] == left && &syms[i + 1] == right {
                    out.push(format!("{left}{right}"));
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut syms[i]));
                    i += 1;
                }
            }
            syms = out;
        }
        syms
    }

    /// Segment a token sequence into subword units.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        tokens.iter().flat_map(|t| self.encode_word(t.as_ref())).collect()
    }

    /// Encode many sentences, segmenting each distinct word once.
    pub fn encode_all<S: AsRef<str>>(&self, sentences: &[Vec<S>]) -> Vec<Vec<String>> {
        let mut cache: HashMap<&str, Vec<String>> = HashMap::new();
        sentences
            .iter()
            .map(|sent| {
                let mut out = Vec::new();
                for tok in sent {
                    let tok = tok.as_ref();
                    let pieces = cache.entry(tok).or_insert_with(|| self.encode_word(tok));
                    out.extend(pieces.iter().cloned());
                }
                out
            })
            .collect()
    }

    /// Serialize to the plain-text model format.
    ///
    /// ```text
    /// #bpe version=1 marker=</w> merges=<N> vocab=<V>
    /// <N lines "left right">
    /// <V lines, one vocabulary symbol each>
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "#bpe version={FORMAT_VERSION} marker={} merges={} vocab={}",
            self.marker,
            self.merges.len(),
            self.vocab.len()
        );
        for (l, r) in &self.merges {
            let _ = writeln!(s, "{l} {r}");
        }
        for v in &self.vocab {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::format(origin, 1, "missing header"))?;
        let mut fields = HashMap::new();
        let mut parts = header.split(' ');
        if parts.next() != Some("#bpe") {
            return Err(Error::format(origin, 1, "header must start with `#bpe`"));
        }
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::format(origin, 1, format!("bad header field {part:?}")))?;
            fields.insert(k, v);
        }
        let num = |k: &str| -> Result<usize> {
            fields
                .get(k)
                .ok_or_else(|| Error::format(origin, 1, format!("header lacks {k}")))?
                .parse()
                .map_err(|_| Error::format(origin, 1, format!("header field {k} is not a number")))
        };
        if num("version")? != FORMAT_VERSION as usize {
            return Err(Error::format(origin, 1, "unsupported model version"));
        }
        let marker = fields
            .get("marker")
            .ok_or_else(|| Error::format(origin, 1, "header lacks marker"))?
            .to_string();
        if marker != END_OF_WORD {
            return Err(Error::format(origin, 1, format!("unsupported marker {marker:?}")));
        }
        let (n_merges, n_vocab) = (num("merges")?, num("vocab")?);

        let mut merges = Vec::with_capacity(n_merges);
        for _ in 0..n_merges {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::format(origin, 0, "truncated merge list"))?;
            let (l, r) = line
                .split_once(' ')
                .filter(|(l, r)| !l.is_empty() && !r.is_empty() && !r.contains(' '))
                .ok_or_else(|| Error::format(origin, i + 1, "merge line must be `left right`"))?;
            merges.push((l.to_string(), r.to_string()));
        }
        let mut vocab = BTreeSet::new();
        for _ in 0..n_vocab {
            let (i, line) = lines
                .next()
                .ok_or_else(|| Error::format(origin, 0, "truncated vocabulary"))?;
            if line.is_empty() || line.contains(' ') {
                return Err(Error::format(origin, i + 1, "bad vocabulary symbol"));
            }
            vocab.insert(line.to_string());
        }
        if let Some((i, _)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(Error::format(origin, i + 1, "trailing content"));
        }
        Ok(BpeModel::from_parts(merges, vocab, marker))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        BpeModel::from_text(&text, &path.display().to_string())
    }

    /// Hex SHA-256 of the serialized model; identifies the vocabulary in score files.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Join subword units back into tokens.
pub fn bpe_decode<S: AsRef<str>>(subwords: &[S]) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, piece) in subwords.iter().enumerate() {
        let piece = piece.as_ref();
        if piece.is_empty() {
            return Err(Error::MalformedSubwords(format!("empty unit at position {i}")));
        }
        match piece.strip_suffix(END_OF_WORD) {
            Some(stem) => {
                current.push_str(stem);
                if current.is_empty() {
                    return Err(Error::MalformedSubwords(format!(
                        "bare end-of-word marker at position {i}"
                    )));
                }
                tokens.push(std::mem::take(&mut current));
            }
            None => current.push_str(piece),
        }
    }
    if !current.is_empty() {
        return Err(Error::MalformedSubwords(format!(
            "last word {current:?} lacks an end-of-word marker"
        )));
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize_13a;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn model(merges: &[(&str, &str)]) -> BpeModel {
        let merges: Vec<_> = merges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        BpeModel::from_parts(merges, BTreeSet::new(), END_OF_WORD.into())
    }

    #[test]
    fn encode_with_single_merge() {
        assert_eq!(model(&[("l", "o")]).encode(&["low"]), vec!["lo", "w</w>"]);
    }

    #[test]
    fn encode_without_merges() {
        assert_eq!(model(&[]).encode(&["ab"]), vec!["a", "b</w>"]);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(bpe_decode(&["lo", "w</w>"]).unwrap(), vec!["low"]);
        assert!(bpe_decode::<&str>(&[]).unwrap().is_empty());
    }

    #[test]
    fn decode_rejects_malformed() {
        assert!(bpe_decode(&["lo", "w"]).is_err());
        assert!(bpe_decode(&["</w>"]).is_err());
        assert!(bpe_decode(&["a", ""]).is_err());
    }

    #[test]
    fn model_text_roundtrip() {
        let f: BTreeMap<String, u64> = [("lower", 3), ("lowest", 2), ("##1", 2), ("newer", 4)]
            .iter()
            .map(|(w, c)| (w.to_string(), *c))
            .collect();
        let m = bpe_train(&f, 20).unwrap();
        let back = BpeModel::from_text(&m.to_text(), "mem").unwrap();
        assert_eq!(back, m);
        assert_eq!(back.hash(), m.hash());
    }

    #[test]
    fn model_text_rejects_garbage() {
        assert!(BpeModel::from_text("", "x").is_err());
        assert!(BpeModel::from_text("#bpe version=2 marker=</w> merges=0 vocab=0\n", "x").is_err());
        assert!(BpeModel::from_text("#bpe version=1 marker=</w> merges=1 vocab=0\n", "x").is_err());
        assert!(BpeModel::from_text("#bpe version=1 marker=</w> merges=1 vocab=0\nab\n", "x").is_err());
    }

    #[test]
    fn compression_is_monotone_in_merges() {
        let text = "the lower newest widest lowest newer wider the the lower";
        let toks = tokenize_13a(text);
        let f = word_frequencies([toks.as_slice()]);
        let mut last = usize::MAX;
        for n in 0..25 {
            let len = bpe_train(&f, n).unwrap().encode(&toks).len();
            assert!(len <= last);
            last = len;
        }
    }

    proptest! {
        #[test]
        fn roundtrip_after_13a(text in "\\PC{0,60}", merges in 0usize..40) {
            let toks = tokenize_13a(&text);
            let f = word_frequencies([toks.as_slice(), tokenize_13a("the lower lowest newer").as_slice()]);
            let m = bpe_train(&f, merges).unwrap();
            prop_assert_eq!(bpe_decode(&m.encode(&toks)).unwrap(), toks);
        }

        #[test]
        fn encode_all_matches_encode(words in proptest::collection::vec("[a-e]{1,6}", 1..20)) {
            let f = word_frequencies([words.as_slice()]);
            let m = bpe_train(&f, 10).unwrap();
            let batch = m.encode_all(std::slice::from_ref(&words));
            prop_assert_eq!(&batch[0], &m.encode(&words));
        }
    }
}
