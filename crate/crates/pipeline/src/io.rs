//! File formats: delimited-text loaders, the line-delimited interchange
//! format, evaluation inputs, and submission outputs.
//!
//! Every loader converts its source into validated [`Corpus`] instances;
//! the canonical interchange form is one JSON record per line with exactly
//! the `TextInstance` fields.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use sarc_core::corpus::adapter::{BinaryMapping, IsarcasmMapping};
use sarc_core::corpus::{Corpus, CorpusError, Source, TextInstance};
use sarc_core::preprocess::parse_stopword_list;
use sarc_core::tasks::{MultiLabelPrediction, PairDecision};

fn read_csv_rows(path: &Path, delimiter: u8) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let header: Vec<String> = reader
        .headers()
        .context("cannot read header row")?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.context("malformed delimited record")?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn collect_rows<F>(rows: Vec<Vec<String>>, permissive: bool, mut convert: F) -> Result<Vec<TextInstance>>
where
    F: FnMut(&[String], usize) -> Result<TextInstance, CorpusError>,
{
    let mut instances = Vec::with_capacity(rows.len());
    for (index, row) in rows.iter().enumerate() {
        match convert(row, index + 1) {
            Ok(instance) => instances.push(instance),
            Err(error @ CorpusError::RowValidation { .. }) if permissive => {
                log::warn!("dropping row: {error}");
            }
            Err(error) => return Err(error.into()),
        }
    }
    Ok(instances)
}

/// Loads the official task file (comma-separated, quoted fields, header).
/// With `permissive`, rows violating instance invariants are warned about
/// and dropped instead of failing the load.
pub fn load_isarcasm(path: &Path, mapping: &IsarcasmMapping, permissive: bool) -> Result<Corpus> {
    let (header, rows) = read_csv_rows(path, b',')?;
    let resolved = mapping.resolve(&header)?;
    let instances = collect_rows(rows, permissive, |row, index| resolved.instance(row, index))?;
    Ok(Corpus::validated("isarcasm", instances)?)
}

/// Loads a binary-labeled auxiliary source through a column mapping.
pub fn load_binary_source(
    path: &Path,
    source: Source,
    mapping: &BinaryMapping,
    delimiter: u8,
    permissive: bool,
) -> Result<Corpus> {
    let (header, rows) = read_csv_rows(path, delimiter)?;
    let resolved = mapping.resolve(&header)?;
    let instances = collect_rows(rows, permissive, |row, index| {
        resolved.instance(row, index, source)
    })?;
    Ok(Corpus::validated(source.id_prefix(), instances)?)
}

/// Reads the canonical interchange format: one JSON object per line.
pub fn read_corpus_jsonl(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut instances = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let instance: TextInstance = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: bad record", path.display(), index + 1))?;
        instances.push(instance);
    }
    let name = path
        .file_stem()
        .map(|stem| stem.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    Ok(Corpus::validated(name, instances)?)
}

pub fn write_corpus_jsonl(path: &Path, corpus: &Corpus) -> Result<()> {
    let mut out = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    for instance in corpus.iter() {
        serde_json::to_writer(&mut out, instance)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Loads a corpus by format name: `isarcasm`, `jsonl`, or `auto` (by
/// extension; `.jsonl`/`.ndjson` is interchange, anything else the official
/// delimited format).
pub fn load_corpus_auto(path: &Path, format: &str, permissive: bool) -> Result<Corpus> {
    match format {
        "jsonl" => read_corpus_jsonl(path),
        "isarcasm" => load_isarcasm(path, &IsarcasmMapping::default(), permissive),
        "auto" => match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => read_corpus_jsonl(path),
            _ => load_isarcasm(path, &IsarcasmMapping::default(), permissive),
        },
        other => bail!("unknown corpus format {other:?} (expected auto, isarcasm, or jsonl)"),
    }
}

/// One text per line, order preserved.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let content =
        fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(content.lines().map(str::to_string).collect())
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut out = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    for line in lines {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Two-column pair file with a `text_0,text_1` header.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let (header, rows) = read_csv_rows(path, b',')?;
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .with_context(|| format!("pair file {} lacks column {name:?}", path.display()))
    };
    let first = position("text_0")?;
    let second = position("text_1")?;
    let mut pairs = Vec::with_capacity(rows.len());
    for (index, row) in rows.iter().enumerate() {
        let get = |column: usize| -> Result<String> {
            row.get(column)
                .cloned()
                .with_context(|| format!("row {}: record too short", index + 1))
        };
        pairs.push((get(first)?, get(second)?));
    }
    Ok(pairs)
}

fn parse_01(raw: &str, path: &Path, line: usize) -> Result<u8> {
    match raw.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => bail!("{}:{line}: expected 0 or 1, got {other:?}", path.display()),
    }
}

/// One `0`/`1` per line (binary labels or chosen pair indices).
pub fn read_binary_lines(path: &Path) -> Result<Vec<u8>> {
    let content =
        fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    content
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(index, line)| parse_01(line, path, index + 1))
        .collect()
}

/// Six-flag rows: a header with the six label names, then comma-separated
/// `0`/`1` flags per line.
pub fn read_flags_csv(path: &Path) -> Result<Vec<MultiLabelPrediction>> {
    use sarc_core::corpus::{CategoryFlags, CategoryLabel};
    let (header, rows) = read_csv_rows(path, b',')?;
    let expected: Vec<&str> = CategoryLabel::ALL.iter().map(|l| l.name()).collect();
    let found: Vec<&str> = header.iter().map(|h| h.trim()).collect();
    if found != expected {
        bail!(
            "{}: header {:?} does not match the six label names {:?}",
            path.display(),
            found,
            expected
        );
    }
    let mut predictions = Vec::with_capacity(rows.len());
    for (index, row) in rows.iter().enumerate() {
        if row.len() != 6 {
            bail!("{}:{}: expected 6 flags, got {}", path.display(), index + 2, row.len());
        }
        let mut flags = CategoryFlags::default();
        for (label, cell) in CategoryLabel::ALL.iter().zip(row) {
            flags.set(*label, parse_01(cell, path, index + 2)? == 1);
        }
        predictions.push(MultiLabelPrediction::from_flags(flags));
    }
    Ok(predictions)
}

/// Binary-detection submission: one `0`/`1` per input line.
pub fn write_submission_a(path: &Path, labels: &[bool]) -> Result<()> {
    let lines: Vec<String> = labels.iter().map(|&l| u8::from(l).to_string()).collect();
    write_lines(path, &lines)
}

/// Multi-label submission: six label names as the header, then one line of
/// six comma-separated flags per input.
pub fn write_submission_b(path: &Path, predictions: &[MultiLabelPrediction]) -> Result<()> {
    use sarc_core::corpus::CategoryLabel;
    let mut out = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let header: Vec<&str> = CategoryLabel::ALL.iter().map(|l| l.name()).collect();
    writeln!(out, "{}", header.join(","))?;
    for prediction in predictions {
        let row: Vec<String> = prediction
            .as_array()
            .iter()
            .map(|&flag| u8::from(flag).to_string())
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Pair-selection submission: one chosen index per pair.
pub fn write_submission_c(path: &Path, decisions: &[PairDecision]) -> Result<()> {
    let lines: Vec<String> = decisions.iter().map(|d| d.chosen_index.to_string()).collect();
    write_lines(path, &lines)
}

/// Stopword list file: one token per line, `#` comments.
pub fn load_stopword_file(path: &Path) -> Result<BTreeSet<String>> {
    let content =
        fs::read_to_string(path).with_context(|| format!("cannot open {}", path.display()))?;
    let list = parse_stopword_list(&content);
    if list.is_empty() {
        bail!("stopword list {} is empty", path.display());
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut file = fs::File::create(&path).unwrap();
        file.write_all(content.as_bytes()).unwrap();
        path
    }

    const OFFICIAL_HEADER: &str =
        "tweet,sarcastic,rephrase,sarcasm,irony,satire,understatement,overstatement,rhetorical_question";

    #[test]
    fn isarcasm_load_counts_and_labels() {
        let dir = tempdir().unwrap();
        let path = write_file(
            &dir,
            "train.csv",
            &format!(
                "{OFFICIAL_HEADER}\n\
                 \"Oh great, rain again\",1,\"I dislike rain\",1,0,0,0,0,0\n\
                 plain tweet,0,,0,0,0,0,0,0\n\
                 \"what a day\",1,,0,1,0,0,0,0\n"
            ),
        );
        let corpus = load_isarcasm(&path, &IsarcasmMapping::default(), false).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(
            corpus.iter().filter(|i| i.sarcastic == Some(true)).count(),
            2
        );
        assert_eq!(corpus.instances[0].rephrase.as_deref(), Some("I dislike rain"));
        assert!(corpus.instances[2].category_flags.irony);
    }

    #[test]
    fn header_only_file_is_empty_corpus() {
        let dir = tempdir().unwrap();
        let path = write_file(&dir, "empty.csv", &format!("{OFFICIAL_HEADER}\n"));
        let corpus = load_isarcasm(&path, &IsarcasmMapping::default(), false).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn missing_rephrase_column_names_it() {
        let dir = tempdir().unwrap();
        let path = write_file(
            &dir,
            "bad.csv",
            "tweet,sarcastic,sarcasm,irony,satire,understatement,overstatement,rhetorical_question\nx,1,1,0,0,0,0,0\n",
        );
        let err = load_isarcasm(&path, &IsarcasmMapping::default(), false).unwrap_err();
        assert!(err.to_string().contains("rephrase"), "{err}");
    }

    #[test]
    fn permissive_load_drops_bad_rows() {
        let dir = tempdir().unwrap();
        let path = write_file(
            &dir,
            "dirty.csv",
            &format!(
                "{OFFICIAL_HEADER}\n\
                 good tweet,1,,1,0,0,0,0,0\n\
                 bad row,0,,1,0,0,0,0,0\n"
            ),
        );
        let err = load_isarcasm(&path, &IsarcasmMapping::default(), false).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");

        let corpus = load_isarcasm(&path, &IsarcasmMapping::default(), true).unwrap();
        assert_eq!(corpus.len(), 1);
    }

    #[test]
    fn binary_source_with_custom_adapter() {
        use sarc_core::corpus::adapter::LabelAdapter;
        let dir = tempdir().unwrap();
        let path = write_file(
            &dir,
            "aux.tsv",
            "Tweet index\tLabel\tTweet text\n1\tyes\tsweet irony here\n2\tno\tjust a tweet\n",
        );
        let mapping = BinaryMapping {
            text: "Tweet text".into(),
            label: "Label".into(),
            labels: LabelAdapter::new(&["yes"], &["no"]),
        };
        let corpus =
            load_binary_source(&path, Source::Semeval18Train, &mapping, b'\t', false).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.instances[0].sarcastic, Some(true));
        assert_eq!(corpus.instances[1].sarcastic, Some(false));
        assert!(corpus.iter().all(|i| i.source == Source::Semeval18Train));
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempdir().unwrap();
        let mut instance = TextInstance::binary("a-1", "Some text", true, Source::Isarcasm);
        instance.category_flags.sarcasm = true;
        instance.rephrase = Some("some text, plainly".into());
        let corpus = Corpus::validated("rt", vec![instance]).unwrap();

        let path = dir.path().join("corpus.jsonl");
        write_corpus_jsonl(&path, &corpus).unwrap();
        let reloaded = read_corpus_jsonl(&path).unwrap();
        assert_eq!(reloaded.instances, corpus.instances);

        let raw = fs::read_to_string(&path).unwrap();
        // Self-describing records with the TextInstance field names.
        assert!(raw.contains("\"id\":"));
        assert!(raw.contains("\"category_flags\":"));
        assert!(raw.contains("\"source\":\"ISARCASM\""));
    }

    #[test]
    fn pair_and_submission_formats() {
        let dir = tempdir().unwrap();
        let pairs_path = write_file(&dir, "pairs.csv", "text_0,text_1\nfirst,second\nthird,fourth\n");
        let pairs = read_pairs(&pairs_path).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0], ("first".to_string(), "second".to_string()));

        let sub_a = dir.path().join("a.txt");
        write_submission_a(&sub_a, &[true, false, true]).unwrap();
        assert_eq!(fs::read_to_string(&sub_a).unwrap(), "1\n0\n1\n");
        assert_eq!(read_binary_lines(&sub_a).unwrap(), vec![1, 0, 1]);

        let decisions = vec![PairDecision::new(0.9, 0.2), PairDecision::new(0.1, 0.3)];
        let sub_c = dir.path().join("c.txt");
        write_submission_c(&sub_c, &decisions).unwrap();
        assert_eq!(fs::read_to_string(&sub_c).unwrap(), "0\n1\n");
    }

    #[test]
    fn flags_csv_round_trip() {
        use sarc_core::corpus::{CategoryFlags, CategoryLabel};
        let dir = tempdir().unwrap();
        let predictions = vec![
            MultiLabelPrediction::from_flags(CategoryFlags::only(CategoryLabel::Irony)),
            MultiLabelPrediction::from_flags(CategoryFlags::default()),
        ];
        let path = dir.path().join("b.csv");
        write_submission_b(&path, &predictions).unwrap();
        let content = fs::read_to_string(&path).unwrap();
        assert!(content.starts_with(
            "sarcasm,irony,satire,understatement,overstatement,rhetorical_question\n"
        ));
        assert_eq!(read_flags_csv(&path).unwrap(), predictions);
    }

    #[test]
    fn bad_binary_line_is_rejected() {
        let dir = tempdir().unwrap();
        let path = write_file(&dir, "bad.txt", "0\n1\ntwo\n");
        let err = read_binary_lines(&path).unwrap_err();
        assert!(err.to_string().contains("expected 0 or 1"));
    }
}
