//! The per-message comparison of model-based coding against the baseline
//! compressor, with corpus aggregates and the amortized grammar cost.

use gramwire::baseline::baseline_bits;
use gramwire::codec::encode;
use gramwire::induction::Corpus;
use gramwire::wire::write_encoding;
use gramwire::{Bits, DeriveParams, Grammar};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct MessageRow {
    pub index: usize,
    /// B_N: raw bits of the message under the grammar's cost model.
    pub raw_bits: Bits,
    /// Information content of the code E.
    pub e_bits: Bits,
    /// On-disk size of E including header, in bits.
    pub e_file_bits: Bits,
    /// The ordinary-compression proxy: compressed size of the message text.
    pub baseline_bits: Bits,
    /// e_bits / baseline_bits: the header-free information ratio.
    pub ratio: Bits,
    /// e_file_bits / baseline_bits: the same ratio charged for the file
    /// header (magic, fingerprint, token count).
    pub file_ratio: Bits,
    pub ext_baseline_bits: Option<Bits>,
    pub ext_ratio: Option<Bits>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub rows: Vec<MessageRow>,
    /// Size of the grammar file in bits: the one-time distribution cost.
    pub grammar_file_bits: Bits,
    /// Grammar file bits divided by message count.
    pub amortized_grammar_bits: Bits,
}

fn aggregate(values: impl Iterator<Item = Bits> + Clone) -> (Bits, Bits, Bits) {
    let mut sorted: Vec<Bits> = values.collect();
    let total: Bits = sorted.iter().sum();
    let n = sorted.len();
    if n == 0 {
        return (0.0, 0.0, 0.0);
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    (total, total / n as Bits, median)
}

impl ComparisonReport {
    /// Encodes every corpus message against the grammar and measures it
    /// against the baseline. Fails with a mismatch error if the corpus uses
    /// symbols outside the grammar's alphabet.
    pub fn build(
        grammar: &Grammar,
        corpus: &Corpus,
        grammar_file_bits: Bits,
        external: Option<&[Bits]>,
    ) -> Result<ComparisonReport, CliError> {
        if corpus.is_empty() {
            return Err(CliError::input("corpus has no messages"));
        }
        if let Some(ext) = external {
            if ext.len() != corpus.len() {
                return Err(CliError::Input(format!(
                    "external baseline has {} rows, corpus has {} messages",
                    ext.len(),
                    corpus.len()
                )));
            }
        }
        let params = DeriveParams::default();
        let mut rows = Vec::with_capacity(corpus.len());
        for (index, message) in corpus.messages.iter().enumerate() {
            let raw = grammar.raw_bits(message).map_err(|e| {
                CliError::Mismatch(format!("message {index}: {e} (alphabet mismatch)"))
            })?;
            let enc = encode(message, grammar, &params);
            let file_bytes = write_encoding(&enc, grammar)
                .map_err(|e| CliError::Input(format!("message {index}: {e}")))?
                .len();
            let base = baseline_bits(message);
            let ext = external.map(|e| e[index]);
            rows.push(MessageRow {
                index,
                raw_bits: raw,
                e_bits: enc.bit_length,
                e_file_bits: (file_bytes * 8) as Bits,
                baseline_bits: base,
                ratio: enc.bit_length / base,
                file_ratio: (file_bytes * 8) as Bits / base,
                ext_baseline_bits: ext,
                ext_ratio: ext.map(|b| enc.bit_length / b),
            });
        }
        let n = rows.len() as Bits;
        Ok(ComparisonReport {
            rows,
            grammar_file_bits,
            amortized_grammar_bits: grammar_file_bits / n,
        })
    }

    pub fn mean_ratio(&self) -> Bits {
        aggregate(self.rows.iter().map(|r| r.ratio)).1
    }

    fn columns(&self) -> Vec<(&'static str, Vec<Bits>)> {
        let mut cols = vec![
            ("raw_bits", self.rows.iter().map(|r| r.raw_bits).collect()),
            ("e_bits", self.rows.iter().map(|r| r.e_bits).collect()),
            (
                "e_file_bits",
                self.rows.iter().map(|r| r.e_file_bits).collect::<Vec<_>>(),
            ),
            (
                "baseline_bits",
                self.rows.iter().map(|r| r.baseline_bits).collect(),
            ),
            ("ratio", self.rows.iter().map(|r| r.ratio).collect()),
            (
                "file_ratio",
                self.rows.iter().map(|r| r.file_ratio).collect(),
            ),
        ];
        if self.rows.iter().all(|r| r.ext_baseline_bits.is_some()) {
            cols.push((
                "ext_baseline_bits",
                self.rows.iter().map(|r| r.ext_baseline_bits.unwrap()).collect(),
            ));
            cols.push((
                "ext_ratio",
                self.rows.iter().map(|r| r.ext_ratio.unwrap()).collect(),
            ));
        }
        cols
    }

    /// Machine-readable CSV: per-message rows followed by total/mean/median
    /// rows. Numbers print in full precision and parse back exactly.
    pub fn to_csv(&self) -> String {
        let cols = self.columns();
        let mut out = String::from("index");
        for (name, _) in &cols {
            out.push(',');
            out.push_str(name);
        }
        out.push_str(",amortized_grammar_bits\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&row.index.to_string());
            for (_, values) in &cols {
                out.push(',');
                out.push_str(&values[i].to_string());
            }
            out.push(',');
            out.push_str(&self.amortized_grammar_bits.to_string());
            out.push('\n');
        }
        for (label, pick) in [
            ("total", 0usize),
            ("mean", 1),
            ("median", 2),
        ] {
            out.push_str(label);
            for (_, values) in &cols {
                let agg = aggregate(values.iter().copied());
                let v = [agg.0, agg.1, agg.2][pick];
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push(',');
            out.push_str(&self.amortized_grammar_bits.to_string());
            out.push('\n');
        }
        out
    }

    /// Human-readable table with an aggregate footer.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:>6} {:>12} {:>12} {:>12} {:>14} {:>8}\n",
            "msg", "raw_bits", "e_bits", "e_file_bits", "baseline_bits", "ratio"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:>6} {:>12.2} {:>12.2} {:>12.0} {:>14.0} {:>8.4}\n",
                row.index, row.raw_bits, row.e_bits, row.e_file_bits, row.baseline_bits, row.ratio
            ));
        }
        let (raw_t, raw_m, raw_md) = aggregate(self.rows.iter().map(|r| r.raw_bits));
        let (e_t, e_m, e_md) = aggregate(self.rows.iter().map(|r| r.e_bits));
        let (b_t, b_m, b_md) = aggregate(self.rows.iter().map(|r| r.baseline_bits));
        let (_, r_m, r_md) = aggregate(self.rows.iter().map(|r| r.ratio));
        out.push_str(&format!(
            "\nmessages: {}\nraw_bits      total {raw_t:.2}  mean {raw_m:.2}  median {raw_md:.2}\n",
            self.rows.len()
        ));
        out.push_str(&format!(
            "e_bits        total {e_t:.2}  mean {e_m:.2}  median {e_md:.2}\n"
        ));
        out.push_str(&format!(
            "baseline_bits total {b_t:.0}  mean {b_m:.0}  median {b_md:.0}\n"
        ));
        out.push_str(&format!("ratio         mean {r_m:.4}  median {r_md:.4}\n"));
        let (_, fr_m, fr_md) = aggregate(self.rows.iter().map(|r| r.file_ratio));
        out.push_str(&format!(
            "file_ratio    mean {fr_m:.4}  median {fr_md:.4}  (e_bits excludes the SPE1 header; file_ratio charges it)\n"
        ));
        out.push_str(&format!(
            "grammar file: {} bits ({} bits/message amortized over {} messages)\n",
            self.grammar_file_bits,
            self.amortized_grammar_bits,
            self.rows.len()
        ));
        out.push_str(&format!(
            "ratio incl. amortized grammar: {:.4}\n",
            (e_t + self.grammar_file_bits) / b_t
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gramwire::{CostMode, PatternSpec};

    fn sample_report() -> ComparisonReport {
        let grammar = Grammar::build(
            &[
                PatternSpec::new("d1", "D", &["t", "h", "e"], 1),
                PatternSpec::new("n1", "N", &["c", "a", "t"], 1),
                PatternSpec::new("n2", "N", &["d", "o", "g"], 1),
                PatternSpec::new("s1", "ROOT", &["@D", "@N"], 1),
            ],
            CostMode::Uniform,
        )
        .unwrap();
        let corpus = Corpus::from_text("c", "t h e c a t\nt h e d o g\nd o g\n", false);
        ComparisonReport::build(&grammar, &corpus, 800.0, None).unwrap()
    }

    #[test]
    fn totals_equal_column_sums() {
        let report = sample_report();
        let (total, mean, _) = aggregate(report.rows.iter().map(|r| r.e_bits));
        let by_hand: f64 = report.rows.iter().map(|r| r.e_bits).sum();
        assert_eq!(total, by_hand);
        assert!((mean - by_hand / 3.0).abs() < 1e-12);
        assert!((report.amortized_grammar_bits - 800.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ratios_positive() {
        let report = sample_report();
        for row in &report.rows {
            assert!(row.baseline_bits > 0.0);
            assert!(row.ratio > 0.0);
        }
    }

    #[test]
    fn csv_parses_back_to_same_numbers() {
        let report = sample_report();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header[0], "index");
        let e_col = header.iter().position(|&h| h == "e_bits").unwrap();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            let value: f64 = fields[e_col].parse().unwrap();
            if i < report.rows.len() {
                assert_eq!(value, report.rows[i].e_bits);
            }
        }
    }

    #[test]
    fn alphabet_mismatch_is_reported() {
        let grammar = Grammar::build(
            &[PatternSpec::new("p", "ROOT", &["x"], 1)],
            CostMode::Uniform,
        )
        .unwrap();
        let corpus = Corpus::from_text("c", "x zebra\n", false);
        match ComparisonReport::build(&grammar, &corpus, 0.0, None) {
            Err(e) => assert_eq!(e.exit_code(), 3),
            Ok(_) => panic!("expected mismatch"),
        }
    }

    #[test]
    fn external_baseline_length_checked() {
        let grammar = Grammar::build(
            &[PatternSpec::new("p", "ROOT", &["x"], 1)],
            CostMode::Uniform,
        )
        .unwrap();
        let corpus = Corpus::from_text("c", "x\nx\n", false);
        let err = ComparisonReport::build(&grammar, &corpus, 0.0, Some(&[100.0])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let ok = ComparisonReport::build(&grammar, &corpus, 0.0, Some(&[100.0, 50.0])).unwrap();
        assert_eq!(ok.rows[0].ext_ratio, Some(ok.rows[0].e_bits / 100.0));
    }
}
