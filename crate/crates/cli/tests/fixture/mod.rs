//! A small on-disk corpus exercising every subcommand.

#![allow(dead_code)]

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

pub struct Corpus {
    pub dir: tempfile::TempDir,
}

const VECTORS: &[(&str, [f64; 4])] = &[
    ("dog", [1.0, 0.1, 0.0, 0.0]),
    ("puppy", [0.9, 0.2, 0.1, 0.0]),
    ("cat", [0.1, 1.0, 0.0, 0.1]),
    ("car", [0.0, 0.0, 1.0, 0.2]),
    ("truck", [0.1, 0.0, 0.9, 0.3]),
    ("tree", [0.0, 0.3, 0.0, 1.0]),
    ("park", [0.2, 0.2, 0.1, 0.8]),
    ("dining_table", [0.5, 0.5, 0.5, 0.0]),
    ("table", [0.4, 0.6, 0.4, 0.1]),
    ("piano", [-3.0, -3.0, 2.0, -3.0]),
];

impl Corpus {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let c = Self { dir };
        let mut emb = format!("{} 4\n", VECTORS.len());
        for (w, v) in VECTORS {
            emb.push_str(&format!("{w} {} {} {} {}\n", v[0], v[1], v[2], v[3]));
        }
        c.write("emb.txt", &emb);
        c.write(
            "gold.jsonl",
            r#"{"image_id": "1", "objects": [{"label": "dog"}, {"label": "tree"}]}
{"image_id": "2", "objects": [{"label": "car"}, {"label": "car"}, {"label": "truck"}]}
{"image_id": "3", "objects": [{"label": "cat"}, {"label": "dining-table"}]}
"#,
        );
        c.write(
            "det.jsonl",
            r#"{"image_id": "1", "objects": [{"label": "dog", "score": 0.9}, {"label": "park", "score": 0.3}]}
{"image_id": "2", "objects": [{"label": "truck", "score": 0.8}]}
{"image_id": "3", "objects": [{"label": "table", "score": 0.7}]}
"#,
        );
        c.write(
            "captions.jsonl",
            r#"{"image_id": "1", "candidate_id": "a", "caption": "A dog under a tree."}
{"image_id": "2", "candidate_id": "a", "caption": "Two cars and a truck"}
{"image_id": "3", "candidate_id": "a", "caption": "a piano on the table"}
"#,
        );
        c.write(
            "references.jsonl",
            r#"{"image_id": "1", "references": ["a puppy in the park", "dog near a tree", "the the the"]}
{"image_id": "2", "references": ["a truck and a car", "cars parked"]}
{"image_id": "3", "references": ["a cat on a table", "cat sitting at the dining table"]}
"#,
        );
        c.write(
            "pairs.jsonl",
            r#"{"image_id": "1", "b": "a dog by a tree", "c": "a piano", "label": "B", "split": "HC"}
{"image_id": "2", "b": "a piano", "c": "a truck", "label": ["C", "C", "B"], "split": "HI"}
{"image_id": "3", "b": "a cat", "c": "a cat", "label": "B", "split": "HM"}
{"image_id": "1", "b": "a dog", "c": "a cat", "label": ["B", "C"], "split": "MM"}
{"image_id": "9", "b": "a dog", "c": "a cat", "label": "B", "split": "MM"}
{"image_id": "2", "b": "a car", "c": "a dog", "label": "B", "split": "MM"}
"#,
        );
        c.write(
            "judgments.jsonl",
            r#"{"image_id": "1", "candidate": "a", "relevance": 4.5, "thoroughness": 4}
{"image_id": "2", "candidate": "a", "relevance": 5, "thoroughness": 3}
{"image_id": "3", "candidate": "a", "relevance": 1.5, "thoroughness": 2}
"#,
        );
        c.write(
            "other.jsonl",
            r#"{"image_id": "1", "candidate_id": "a", "score": 0.2}
{"image_id": "2", "candidate_id": "a", "score": 0.4}
{"image_id": "3", "candidate_id": "a", "score": 1.0}
"#,
        );
        c
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn write(&self, name: &str, contents: &str) {
        let mut f = std::fs::File::create(self.path(name)).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
    }

    pub fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }

    /// Runs the binary inside the corpus directory with a clean
    /// `VIFIDEL_*` environment.
    pub fn run(&self, args: &[&str]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_vifidel"));
        for (k, _) in std::env::vars() {
            if k.starts_with("VIFIDEL_") {
                cmd.env_remove(k);
            }
        }
        cmd.current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    /// Every subcommand with file outputs, named by `tag`.
    pub fn invocations(tag: &str) -> Vec<Vec<String>> {
        let s = |v: &[&str]| v.iter().map(|x| x.replace("{}", tag)).collect::<Vec<_>>();
        vec![
            s(&[
                "score",
                "--embeddings",
                "emb.txt",
                "--detections",
                "gold.jsonl",
                "--detections",
                "det.jsonl",
                "--det-threshold",
                "gold",
                "--det-threshold",
                "d500",
                "--captions",
                "captions.jsonl",
                "--references",
                "references.jsonl",
                "--output",
                "score-{}.jsonl",
                "--summary",
                "score-{}.tsv",
                "--dump-plan",
                "plan-{}.jsonl",
            ]),
            s(&[
                "score",
                "--embeddings",
                "emb.txt",
                "--detections",
                "gold.jsonl",
                "--binarize",
                "--captions",
                "captions.jsonl",
                "--output",
                "plain-{}.jsonl",
            ]),
            s(&[
                "eval-pairwise",
                "--embeddings",
                "emb.txt",
                "--detections",
                "gold.jsonl",
                "--items",
                "pairs.jsonl",
                "--references",
                "references.jsonl",
                "--n-refs",
                "1",
                "--output",
                "eval-{}.tsv",
                "--skipped",
                "skipped-{}.jsonl",
            ]),
            s(&[
                "eval-pairwise",
                "--embeddings",
                "emb.txt",
                "--detections",
                "gold.jsonl",
                "--items",
                "pairs.jsonl",
                "--references",
                "references.jsonl",
                "--n-refs",
                "1",
                "--ref-sample-seeds",
                "1,2,3",
                "--output",
                "sampled-{}.tsv",
            ]),
            s(&[
                "eval-pairwise",
                "--embeddings",
                "emb.txt",
                "--items",
                "pairs.jsonl",
                "--references",
                "references.jsonl",
                "--n-refs",
                "2",
                "--metric",
                "wmd-best",
                "--output",
                "best-{}.tsv",
            ]),
            s(&[
                "correlate",
                "--judgments",
                "judgments.jsonl",
                "--scores",
                "other.jsonl",
                "--output",
                "corr-{}.tsv",
            ]),
            s(&[
                "combine",
                "other.jsonl",
                "other.jsonl",
                "--output",
                "combined-{}.jsonl",
            ]),
        ]
    }

    /// Output files named in an invocation.
    pub fn outputs(args: &[String]) -> Vec<String> {
        args.windows(2)
            .filter(|w| {
                matches!(
                    w[0].as_str(),
                    "--output" | "--summary" | "--dump-plan" | "--skipped"
                )
            })
            .map(|w| w[1].clone())
            .collect()
    }
}
