use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;
use xlit::pipeline::{AnalysisReport, ComparisonTable};
use xlit::report::{StatsTable, TidyRow};
use xlit::{OverlapReport, SubwordModel, TokenSet};

fn xlit(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_xlit"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // the child may exit before reading its input
    let _ = child.stdin.take().unwrap().write_all(stdin.as_bytes());
    child.wait_with_output().unwrap()
}

fn ok(args: &[&str], stdin: &str) -> String {
    let out = xlit(args, stdin);
    assert!(
        out.status.success(),
        "xlit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const ENG: &str = "the hotel is near the sea\nwe went to canada and korea\na tree and a flower in the garden\n";
const SPA: &str = "el hotel esta cerca del mar\nfuimos a canada y corea\nun arbol y una flor en el jardin\n";
const KOR: &str = "호텔 은 바다 근처 에 있다\n우리 는 캐나다 와 한국 에 갔다\n정원 에 나무 와 꽃\n";

fn corpus_dir() -> TempDir {
    let dir = TempDir::new().unwrap();
    for (lang, text) in [("eng", ENG), ("spa", SPA), ("kor", KOR)] {
        fs::write(dir.path().join(format!("{lang}.txt")), text).unwrap();
    }
    dir
}

#[test]
fn translit_modes() {
    assert_eq!(ok(&["translit", "--mode", "cipher", "--shift", "4"], "apple\r\nzebra"), "ettpi\r\ndifve");
    assert_eq!(ok(&["translit", "--mode", "cipher", "--shift", "4", "--decipher"], "ettpi\n"), "apple\n");
    assert_eq!(ok(&["translit", "--mode", "rom", "--lang", "kor"], "한국\n"), "hanguk\n");
    let enc = ok(&["translit", "--mode", "cipher", "--lang", "kor", "--shift", "2"], "캐나다\n");
    assert_eq!(enc, "mcgpcfc\n");
}

#[test]
fn translit_rejects_bad_input() {
    let out = xlit(&["translit", "--mode", "cipher", "--shift", "40"], "a\n");
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let out = xlit(&["translit", "--mode", "rom", "--lang", "zzz"], "a\n");
    assert_ne!(out.status.code(), Some(0));
    let out = xlit(&["translit"], "");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn custom_rule_table() {
    let dir = TempDir::new().unwrap();
    let table = dir.path().join("toy.tsv");
    fs::write(&table, "# lang: tst\n# mode: g2p\nph\tf\nc\tk\n").unwrap();
    assert_eq!(ok(&["translit", "--mode", "g2p", "--table", p(&table)], "phonic\n"), "fonik\n");
}

#[test]
fn tokenizer_workflow() {
    let dir = corpus_dir();
    let d = dir.path();
    let model = d.join("model.json");
    ok(
        &[
            "train-tokenizer",
            "-i",
            p(&d.join("eng.txt")),
            p(&d.join("spa.txt")),
            "-o",
            p(&model),
            "--vocab-size",
            "120",
        ],
        "",
    );
    let m = SubwordModel::from_json(&fs::read_to_string(&model).unwrap()).unwrap();
    assert!(m.len() <= 120);

    let tokens = ok(&["encode", "--model", p(&model)], "the sea\n");
    let ids = ok(&["encode", "--model", p(&model), "--ids"], "the sea\n");
    assert_eq!(tokens.split_whitespace().count(), ids.split_whitespace().count());
    let expected: Vec<String> = m.encode("the sea").iter().map(|i| i.to_string()).collect();
    assert_eq!(ids.trim_end(), expected.join(" "));

    // hangul is entirely UNK under this model, so overlap is measured on romanized text
    let kor_rom = ok(&["translit", "--mode", "rom", "--lang", "kor", "-i", p(&d.join("kor.txt"))], "");
    assert!(kor_rom.is_ascii());
    fs::write(d.join("kor.txt"), kor_rom).unwrap();

    let mut sets = Vec::new();
    for lang in ["eng", "spa", "kor"] {
        let out = d.join(format!("{lang}.tokens"));
        ok(
            &["token-set", "--model", p(&model), "--lang", lang, "-i", p(&d.join(format!("{lang}.txt"))), "-o", p(&out)],
            "",
        );
        let set: TokenSet = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
        assert_eq!(set.lang, lang);
        sets.push(out);
    }

    let sources = format!("{},{}", p(&sets[0]), p(&sets[1]));
    let json = ok(&["overlap", "--target", p(&sets[2]), "--sources", &sources], "");
    let report: OverlapReport = serde_json::from_str(&json).unwrap();
    assert_eq!(report.target_lang, "kor");
    let total: xlit::Fraction = report.by_length.values().sum();
    assert_eq!(total, report.overall_ratio);

    let csv = ok(&["overlap", "--target", p(&sets[0]), "--sources", p(&sets[1]), "--format", "csv"], "");
    let rows: Vec<TidyRow> = xlit::report::read_rows(csv.as_bytes()).unwrap();
    assert_eq!(rows[0].metric, "overlap_max");
    assert!(rows[0].length.is_none());

    let q = ok(&["quality", "--model", p(&model), "--lang", "kor"], KOR);
    let q: serde_json::Value = serde_json::from_str(&q).unwrap();
    // every hangul character is outside the Latin-trained alphabet
    assert_eq!(q["report"]["unk_ratio"]["value"], 1.0);
}

#[test]
fn token_set_from_plain_list() {
    let dir = TempDir::new().unwrap();
    let tgt = dir.path().join("tgt.txt");
    let src = dir.path().join("src.txt");
    fs::write(&tgt, "▁ab\nc\nde\n").unwrap();
    fs::write(&src, "▁ab\nde\nx\n").unwrap();
    let json = ok(&["overlap", "--target", p(&tgt), "--sources", p(&src)], "");
    let report: OverlapReport = serde_json::from_str(&json).unwrap();
    assert_eq!(report.best_source_lang, "src");
    assert_eq!(report.overall_ratio, xlit::Fraction::new(2, 3));
}

#[test]
fn select_langs_command() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(
        d.join("features.csv"),
        "lang,kind,values\n\
         aaa,syntactic,\"1,0,1,0\"\naaa,geographic,\"1,0\"\naaa,genetic,\"1,0\"\n\
         bbb,syntactic,\"1,0,1,1\"\nbbb,geographic,\"1,0.1\"\nbbb,genetic,\"1,0\"\n\
         ccc,syntactic,\"0,1,0,1\"\nccc,geographic,\"0,1\"\nccc,genetic,\"0,1\"\n\
         ddd,syntactic,\"0,1,0,1\"\nddd,geographic,\"--\"\nddd,genetic,\"0,1\"\n",
    )
    .unwrap();
    fs::write(d.join("scripts.csv"), "lang,script\naaa,Latn\nbbb,Latn\nccc,Latn\nddd,Cyrl\n").unwrap();
    let corpora = d.join("corpora");
    fs::create_dir(&corpora).unwrap();
    for (lang, text) in [("aaa", "x y z"), ("bbb", "x y w"), ("ccc", "p q"), ("ddd", "p q r")] {
        fs::write(corpora.join(format!("{lang}.txt")), text).unwrap();
    }
    let (features, scripts) = (d.join("features.csv"), d.join("scripts.csv"));
    let base = [
        "select-langs",
        "--features",
        p(&features),
        "--scripts",
        p(&scripts),
        "--corpus-dir",
        p(&corpora),
        "--set-size",
        "2",
    ];
    let run = |extra: &[&str]| -> serde_json::Value {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        serde_json::from_str(&ok(&args, "")).unwrap()
    };
    let sim = run(&["--regime", "sim-same", "--script", "Latn"]);
    assert_eq!(sim["langs"], serde_json::json!(["aaa", "bbb"]));
    let dissim = run(&["--regime", "dissim-div"]);
    assert_eq!(dissim["regime"], "dissim-div");

    // a same-script regime over a mixed pool is a data error
    let args: Vec<&str> = base.iter().chain(&["--regime", "sim-same"]).copied().collect();
    assert_eq!(xlit(&args, "").status.code(), Some(3));
    let args: Vec<&str> = base.iter().chain(&["--regime", "sim-div", "--missing", "error"]).copied().collect();
    assert_eq!(xlit(&args, "").status.code(), Some(3));
}

#[test]
fn stats_command() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let scores = d.join("scores.csv");
    fs::write(
        &scores,
        "lang,input_type,score\naaa,ortho,0.50\nbbb,ortho,0.40\nccc,ortho,0.30\nddd,ortho,0.45\n\
         aaa,rom,0.55\nbbb,rom,0.48\nccc,rom,0.31\nddd,rom,0.52\n",
    )
    .unwrap();
    let table: StatsTable = serde_json::from_str(&ok(&["stats", "--scores", p(&scores), "--test", "ttest"], "")).unwrap();
    assert_eq!(table.rows.len(), 1);
    let row = &table.rows[0];
    assert_eq!((row.input_type_a.as_str(), row.input_type_b.as_str(), row.n), ("ortho", "rom", 4));
    // differences -0.05, -0.08, -0.01, -0.07: t computed by hand
    let d = [-0.05f64, -0.08, -0.01, -0.07];
    let mean = d.iter().sum::<f64>() / 4.0;
    let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
    assert!((row.statistic - mean / (sd / 2.0)).abs() < 1e-12);

    let metrics = dir.path().join("metrics.csv");
    fs::write(
        &metrics,
        "target_lang,input_type,metric,length,value\naaa,ortho,unk_ratio,,0.1\nbbb,ortho,unk_ratio,,0.2\n\
         ccc,ortho,unk_ratio,,0.3\nddd,ortho,unk_ratio,,0.15\naaa,ortho,unk_ratio,2,9\n",
    )
    .unwrap();
    let out = ok(
        &["stats", "--scores", p(&scores), "--metrics", p(&metrics), "--test", "correlation", "--format", "csv"],
        "",
    );
    let rows: Vec<xlit::report::StatsRow> = xlit::report::read_rows(out.as_bytes()).unwrap();
    let spearman = rows.iter().find(|r| r.test == "spearman").unwrap();
    // scores fall exactly as unk_ratio rises on the ortho rows
    assert_eq!(spearman.statistic, -1.0);
    assert_eq!(spearman.n, 4);

    let out = xlit(&["stats", "--scores", p(&scores), "--test", "correlation"], "");
    assert_eq!(out.status.code(), Some(2));
}

fn write_config(dir: &Path, corpora: &Path, input_type: &str, extra: &str) -> std::path::PathBuf {
    let path = dir.join(format!("{input_type}.toml"));
    fs::write(
        &path,
        format!(
            "input_type = \"{input_type}\"\nvocab_size = 200\nbudget = 1000\ncorpus_dir = \"{}\"\n{extra}\n\
             [[languages]]\nlang = \"eng\"\nseen = true\n\
             [[languages]]\nlang = \"spa\"\nseen = true\n\
             [[languages]]\nlang = \"kor\"\nseen = false\n",
            corpora.display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn run_and_compare() {
    let corpora = corpus_dir();
    let work = TempDir::new().unwrap();
    let w = work.path();
    let mut reports = Vec::new();
    for (it, extra) in [
        ("ortho", ""),
        ("rom", ""),
        ("cipher", "[cipher_keys]\neng = 1\nspa = 2\nkor = 3\n"),
    ] {
        let cfg = write_config(w, corpora.path(), it, extra);
        let out = w.join(format!("{it}.json"));
        let art = w.join(format!("art-{it}"));
        ok(&["run", "--config", p(&cfg), "-o", p(&out), "--artifacts", p(&art)], "");
        let report: AnalysisReport = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
        assert_eq!(report.header.input_type.as_str(), it);
        assert!(art.join("model.json").is_file());
        assert!(art.join(format!("kor.{it}.tokens")).is_file());
        assert!(art.join(format!("kor.{it}.txt")).is_file());

        // the same run twice yields the same bytes
        let again = ok(&["run", "--config", p(&cfg)], "");
        assert_eq!(again.as_bytes(), fs::read(&out).unwrap());
        reports.push(out);
    }
    let kor_ortho = fs::read_to_string(w.join("art-ortho/kor.ortho.txt")).unwrap();
    assert!(kor_ortho.contains("캐나다"));

    let table: ComparisonTable =
        serde_json::from_str(&ok(&["compare", p(&reports[0]), p(&reports[1]), p(&reports[2])], "")).unwrap();
    assert_eq!(table.input_types.len(), 3);
    let unk = table.rows.iter().find(|r| r.lang == "kor" && r.metric == "unk_ratio").unwrap();
    let ortho = unk.values[0].unwrap();
    let rom = unk.values[1].unwrap();
    assert!(rom < ortho, "romanizing korean should lower its UNK ratio ({rom} vs {ortho})");

    let csv = ok(&["run", "--config", p(&w.join("rom.toml")), "--format", "csv"], "");
    assert!(csv.starts_with("target_lang,input_type,metric,length,value\n"));
}

#[test]
fn run_config_errors() {
    let corpora = corpus_dir();
    let work = TempDir::new().unwrap();
    let cfg = write_config(work.path(), corpora.path(), "rom", "unknown_field = 3");
    assert_eq!(xlit(&["run", "--config", p(&cfg)], "").status.code(), Some(2));
    let cfg = write_config(work.path(), corpora.path(), "cipher", "");
    // cipher without keys is a configuration error
    assert_eq!(xlit(&["run", "--config", p(&cfg)], "").status.code(), Some(2));
    let out = xlit(&["run", "--config", p(&work.path().join("missing.toml"))], "");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output() {
    let out = xlit(&["translit", "--mode", "cipher", "--shift", "1", "-o", "/nonexistent/dir/out.txt"], "a\n");
    assert_eq!(out.status.code(), Some(4));
}
