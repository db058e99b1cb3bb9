use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use priorclust::evaluation::RecordSet;
use priorclust::linkage::registry;
use priorclust::metric_space::read_matrix;
use priorclust::synth::{interior_fixture, random_matrix, random_tree};
use priorclust::{blend, cut, BlendWeight, Dendrogram, FlatPartition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const SIX_LEAF: &str = "(((1,2),(3,4)),(5,6));";

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn put(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_priorclust"))
            .args(args)
            .current_dir(self.0.path())
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let o = self.run(args);
        assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
        o
    }
}

fn code(o: &Output) -> Option<i32> {
    o.status.code()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn six_leaf_dir() -> Dir {
    let d = Dir::new();
    d.put("t.nwk", SIX_LEAF);
    d.ok(&["encode-tree", "t.nwk", "-o", "u.csv"]);
    d
}

#[test]
fn encode_tree_writes_leaf_count_ratios() {
    let d = six_leaf_dir();
    let u = read_matrix(&d.path("u.csv")).unwrap();
    assert_eq!(u.labels(), ["1", "2", "3", "4", "5", "6"]);
    assert_eq!(u.get(0, 1), 2.0 / 6.0);
    assert_eq!(u.get(0, 2), 4.0 / 6.0);
    assert_eq!(u.get(0, 4), 1.0);
    assert!(d.read("u.csv").starts_with("label_a,label_b,value\n1,2,"));
}

#[test]
fn encode_tree_json_and_order() {
    let d = Dir::new();
    d.put(
        "t.json",
        r#"{"children":[{"children":[{"name":"a"},{"name":"b"}]},{"name":"c"}]}"#,
    );
    d.put("order.txt", "label\nc\nb\na\n");
    d.ok(&["encode-tree", "t.json", "--order", "order.txt", "-o", "u.csv"]);
    let u = read_matrix(&d.path("u.csv")).unwrap();
    assert_eq!(u.labels(), ["c", "b", "a"]);
    assert_eq!(u.get(1, 2), 2.0 / 3.0);
    assert_eq!(u.get(0, 2), 1.0);
}

#[test]
fn single_leaf_tree_gives_empty_matrix() {
    let d = Dir::new();
    d.put("t.nwk", "(a);");
    d.ok(&["encode-tree", "t.nwk", "-o", "u.csv"]);
    assert!(read_matrix(&d.path("u.csv")).unwrap().is_empty());
}

#[test]
fn malformed_tree_exits_2_with_position() {
    let d = Dir::new();
    d.put("bad.nwk", "((a,b),c;");
    let o = d.run(&["encode-tree", "bad.nwk", "-o", "u.csv"]);
    assert_eq!(code(&o), Some(2));
    assert!(stderr(&o).contains("error:"), "{}", stderr(&o));
    assert!(!d.path("u.csv").exists(), "no partial output");
}

#[test]
fn missing_input_exits_2() {
    let d = Dir::new();
    assert_eq!(code(&d.run(&["encode-tree", "nope.nwk", "-o", "u.csv"])), Some(2));
}

#[test]
fn cosine_distances() {
    let d = Dir::new();
    d.put("e.csv", "label,x,y,z\np,1,1,0\nq,2,2,0\nr,0,0,3\ns,0,1,1\n");
    d.ok(&["distances", "e.csv", "-o", "d.csv"]);
    let m = read_matrix(&d.path("d.csv")).unwrap();
    let tol = 1e-12;
    assert!(m.get(0, 1).abs() < tol);
    assert!((m.get(0, 2) - 1.0).abs() < tol);
    assert!((m.get(0, 3) - 0.5).abs() < tol);
}

#[test]
fn zero_vector_is_rejected_by_label() {
    let d = Dir::new();
    d.put("e.tsv", "label\tx\ty\np\t1\t0\nzz\t0\t0\n");
    let o = d.run(&["distances", "e.tsv", "-o", "d.csv"]);
    assert_eq!(code(&o), Some(2));
    assert!(stderr(&o).contains("zz"), "{}", stderr(&o));
}

#[test]
fn cluster_on_prior_reproduces_tree() {
    let d = six_leaf_dir();
    for linkage in ["single", "complete", "average"] {
        d.ok(&["cluster", "u.csv", "--prior", "u.csv", "--alpha", "1", "--linkage", linkage, "-o", "dend.csv"]);
        let dend = Dendrogram::read(&d.path("dend.csv")).unwrap();
        let h: Vec<f64> = dend.heights().collect();
        assert_eq!(h, [2.0 / 6.0, 2.0 / 6.0, 2.0 / 6.0, 4.0 / 6.0, 1.0]);
        assert_eq!(dend.cophenetic(), read_matrix(&d.path("u.csv")).unwrap());
        assert_eq!(
            d.read("dend.nwk"),
            format!("((5,6){t},((1,2){t},(3,4){t}){f})1;\n", t = 2.0 / 6.0, f = 4.0 / 6.0)
        );
    }
}

#[test]
fn cluster_blend_matches_library() {
    let d = Dir::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let task = random_matrix(9, 0.0, 1.0, &mut rng);
    let tree = random_tree(9, &mut rng);
    priorclust::metric_space::write_matrix(&d.path("task.csv"), &task).unwrap();
    d.put("t.nwk", &tree.to_newick());
    d.ok(&["encode-tree", "t.nwk", "--order", "task.csv.labels", "-o", "u.csv"]);
    let u = tree.to_ultrametric(task.labels()).unwrap();
    for (alpha, linkage) in [(0.0, "single"), (0.35, "average"), (0.8, "complete")] {
        let a = alpha.to_string();
        d.ok(&["cluster", "task.csv", "--prior", "u.csv", "--alpha", &a, "--linkage", linkage, "-o", "dend.csv"]);
        let want = registry()
            .build(linkage)
            .unwrap()
            .cluster(&blend(&task, &u, BlendWeight::new(alpha).unwrap()).unwrap())
            .unwrap();
        assert_eq!(Dendrogram::read(&d.path("dend.csv")).unwrap(), want, "alpha {alpha}");
    }
    // No prior: alpha 0 clusters the raw task matrix, anything else is refused.
    d.ok(&["cluster", "task.csv", "-o", "raw.csv", "--newick", "raw.tree"]);
    assert!(d.path("raw.tree").exists());
    let o = d.run(&["cluster", "task.csv", "--alpha", "0.5", "-o", "x.csv"]);
    assert_eq!(code(&o), Some(2));
}

#[test]
fn cluster_rejects_bad_alpha_and_linkage() {
    let d = six_leaf_dir();
    assert_eq!(code(&d.run(&["cluster", "u.csv", "--prior", "u.csv", "--alpha", "1.5", "-o", "x.csv"])), Some(2));
    let o = d.run(&["cluster", "u.csv", "--linkage", "ward", "-o", "x.csv"]);
    assert_eq!(code(&o), Some(2));
    assert!(stderr(&o).contains("ward"));
}

#[test]
fn cut_and_unattainable() {
    let d = six_leaf_dir();
    d.ok(&["cluster", "u.csv", "--prior", "u.csv", "--alpha", "1", "-o", "dend.csv"]);
    d.ok(&["cut", "dend.csv", "-k", "3", "-o", "p3.csv"]);
    let p = FlatPartition::read(&d.path("p3.csv")).unwrap();
    assert_eq!(p.k(), 3);
    assert_eq!(p.clusters(), vec![vec!["1", "2"], vec!["3", "4"], vec!["5", "6"]]);
    d.ok(&["cut", "dend.csv", "-k", "1", "-o", "p1.csv"]);
    assert_eq!(FlatPartition::read(&d.path("p1.csv")).unwrap().k(), 1);

    let o = d.run(&["cut", "dend.csv", "-k", "5", "-o", "p5.csv"]);
    assert_eq!(code(&o), Some(3));
    let err = stderr(&o);
    assert!(err.contains("attainable K: 1, 2, 3, 6"), "{err}");
    assert!(err.contains("3 below, 6 above"), "{err}");
    assert!(!d.path("p5.csv").exists());
    assert_eq!(code(&d.run(&["cut", "dend.csv", "-k", "0", "-o", "p0.csv"])), Some(2));
}

#[test]
fn evaluate_reports() {
    let d = six_leaf_dir();
    d.ok(&["cluster", "u.csv", "--prior", "u.csv", "--alpha", "1", "-o", "dend.csv"]);
    d.ok(&["cut", "dend.csv", "-k", "1", "-o", "p1.csv"]);
    d.ok(&["cut", "dend.csv", "-k", "3", "-o", "p3.csv"]);
    d.put("r.csv", "keyword,item_label,purchase_count\nk,1,3\nk,3,1\nm,5,2\nm,6,2\n");
    let o = d.ok(&["evaluate", "--partition", "p1.csv", "--partition", "p3.csv", "--records", "r.csv"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports[0]["raw"]["purity"], 1.0);
    assert_eq!(reports[0]["raw"]["entropy"], 0.0);
    // k: 3 of 4 in {1,2}; m: both purchases in {5,6}.
    assert_eq!(reports[1]["raw"]["purity"], (0.75 + 1.0) / 2.0);
    assert_eq!(reports[0]["normalized"]["purity"], 1.0);
    assert_eq!(reports[1]["normalized"]["entropy"], 1.0);

    d.ok(&["evaluate", "--partition", "p3.csv", "--records", "r.csv", "--format", "csv", "-o", "e.csv"]);
    let csv = d.read("e.csv");
    assert!(csv.starts_with("partition,keywords,purity,"), "{csv}");

    d.put("bad.csv", "keyword,item_label,purchase_count\nk,9,1\n");
    let o = d.run(&["evaluate", "--partition", "p3.csv", "--records", "bad.csv"]);
    assert_eq!(code(&o), Some(2));
    assert!(stderr(&o).contains('9'));
}

#[test]
fn check_reports_ultrametric_and_counterexample() {
    let d = six_leaf_dir();
    let o = d.ok(&["check", "u.csv"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ultrametric"]["holds"], true, "{v}");

    let m = "label_a,label_b,value\na,b,1\na,c,2\na,d,3\nb,c,1\nb,d,2.5\nc,d,1.5\n";
    d.put("m.csv", m);
    d.put("m.csv.labels", "label\na\nb\nc\nd\n");
    d.ok(&["check", "m.csv", "--trials", "60", "-o", "check.json"]);
    let v: serde_json::Value = serde_json::from_str(&d.read("check.json")).unwrap();
    assert_eq!(v["ultrametric"]["holds"], false, "{v}");
}

fn tune(dir: &Dir, config: &Path, out: &str, extra: &[&str]) {
    let mut args = vec!["tune", config.to_str().unwrap(), "--out-dir", out];
    args.extend_from_slice(extra);
    dir.ok(&args);
}

#[test]
fn tune_interior_fixture() {
    let d = Dir::new();
    let f = interior_fixture(21);
    let config = f.write_files(d.0.path(), 21).unwrap();
    tune(&d, &config, "out", &[]);
    let alphas = d.read("out/alphas.csv");
    assert_eq!(alphas.lines().next(), Some("segment,size,alpha,score"));
    let row: Vec<&str> = alphas.lines().nth(1).unwrap().split(',').collect();
    let chosen: f64 = row[2].parse().unwrap();
    assert!(chosen > 0.0 && chosen < 1.0, "{alphas}");
    assert_eq!(row[3], "1");
    let grid = d.read("out/grid.csv");
    assert_eq!(grid.lines().count(), 1 + f.alphas.len());
    let test = d.read("out/test.csv");
    assert!(test.starts_with("K,purity,entropy,weighted_entropy\n12,1,0,0"), "{test}");
    assert!(d.path("out/dendrogram.nwk").exists());

    // Composability: the same dendrogram from the single-step commands.
    d.ok(&["encode-tree", "tree.nwk", "--order", "distances.csv.labels", "-o", "u.csv"]);
    let a = chosen.to_string();
    d.ok(&["cluster", "distances.csv", "--prior", "u.csv", "--alpha", &a, "-o", "manual.csv"]);
    assert_eq!(d.read("manual.csv"), d.read("out/dendrogram.csv"));
    d.ok(&["cut", "manual.csv", "-k", "12", "-o", "p.csv"]);
    let o = d.ok(&["evaluate", "--partition", "p.csv", "--records", "records.csv"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reports"][0]["raw"]["purity"], 1.0);
}

#[test]
fn tune_cells_match_single_step_pipeline() {
    let d = Dir::new();
    let f = interior_fixture(22);
    let config = f.write_files(d.0.path(), 22).unwrap();
    tune(&d, &config, "out", &[]);
    let u = f.tree.to_ultrametric(f.task.labels()).unwrap();
    let records = RecordSet::read(&d.path("records.csv")).unwrap();
    for line in d.read("out/grid.csv").lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let alpha: f64 = cols[1].parse().unwrap();
        let k: usize = cols[2].parse().unwrap();
        let dend = priorclust::single_linkage(&blend(&f.task, &u, BlendWeight::new(alpha).unwrap()).unwrap()).unwrap();
        let want = match cut(&dend, k) {
            Ok(p) => priorclust::evaluation::purity(&p, &records).unwrap().to_string(),
            Err(_) => "UNATTAINABLE".into(),
        };
        assert_eq!(cols[4], want, "alpha {alpha}");
    }
}

#[test]
fn tune_is_deterministic_and_seed_overridable() {
    let d = Dir::new();
    let f = interior_fixture(23);
    let config = f.write_files(d.0.path(), 23).unwrap();
    let text = d.read("config.toml").replace("strategy = \"tree-cut\"\nk = 1", "strategy = \"medoids\"\nk = 3");
    let medoids = d.put("medoids.toml", &text);
    for cfg in [&config, &medoids] {
        tune(&d, cfg, "a", &[]);
        tune(&d, cfg, "b", &[]);
        tune(&d, cfg, "c", &["--seed", "23"]);
        for name in ["grid.csv", "alphas.csv", "dendrogram.csv", "dendrogram.nwk", "test.csv"] {
            assert_eq!(d.read(&format!("a/{name}")), d.read(&format!("b/{name}")), "{name}");
            assert_eq!(d.read(&format!("a/{name}")), d.read(&format!("c/{name}")), "{name}");
        }
    }
}

#[test]
fn tune_trivial_and_bad_configs() {
    let d = six_leaf_dir();
    d.put("t.nwk", SIX_LEAF);
    d.put("r.csv", "keyword,item_label,purchase_count\nk,1,1\nk,2,1\nm,5,1\n");
    let cfg = d.put(
        "c.toml",
        "tree = \"t.nwk\"\ndistances = \"u.csv\"\n[records]\ntrain = \"r.csv\"\n[grid]\nalphas = [0.0, 1.0]\nks = [3, 5]\n",
    );
    tune(&d, &cfg, "out", &[]);
    let grid = d.read("out/grid.csv");
    assert!(grid.contains(",5,purity,UNATTAINABLE"), "{grid}");
    assert!(!d.path("out/test.csv").exists());

    let bad = d.put("bad.toml", "tree = \"t.nwk\"\n[grid]\nalphas = [0.5]\nks = [2]\n");
    assert_eq!(code(&d.run(&["tune", bad.to_str().unwrap(), "--out-dir", "x"])), Some(2));
    let unknown = d.put("unknown.toml", "tree = \"t.nwk\"\ndistances = \"u.csv\"\ncolour = 1\n");
    assert_eq!(code(&d.run(&["tune", unknown.to_str().unwrap(), "--out-dir", "x"])), Some(2));
}

#[test]
fn encode_tree_order_must_match_leaves() {
    // The standalone encoder does not prune; alignment happens in `tune`.
    let d = Dir::new();
    d.put("t.nwk", "((a,b,z),(c,y));");
    d.put("o.txt", "label\na\nb\nc\n");
    let o = d.run(&["encode-tree", "t.nwk", "--order", "o.txt", "-o", "u.csv"]);
    assert_eq!(code(&o), Some(2));
    assert!(stderr(&o).contains("z, y"), "{}", stderr(&o));
}
