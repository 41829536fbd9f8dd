use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slicegen_core::ir::{parse_program, IrProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenLimits {
    pub max_methods: usize,
    pub max_branches: usize,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits { max_methods: 5, max_branches: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct RandomProgram {
    pub seed: u64,
    pub source: String,
    pub program: IrProgram,
    pub methods: usize,
    pub branches: usize,
}

const OBJ: [&str; 3] = ["fw.A", "fw.B", "fw.C"];
const PARAM_TYPES: [&str; 5] = ["int", "java.lang.String", "fw.A", "fw.B", "fw.C"];
const RETURN_TYPES: [&str; 6] = ["void", "int", "java.lang.String", "fw.A", "fw.B", "fw.C"];

fn next_class(k: &str) -> &'static str {
    match k {
        "fw.A" => "fw.B",
        "fw.B" => "fw.C",
        _ => "fw.A",
    }
}

fn prev_class(k: &str) -> &'static str {
    match k {
        "fw.A" => "fw.C",
        "fw.B" => "fw.A",
        _ => "fw.B",
    }
}

fn framework_block() -> String {
    let mut s = String::from("framework {\n    class fw.Clock;\n    static method <fw.Clock: long now()>;\n");
    for k in OBJ {
        let j = next_class(k);
        let _ = writeln!(s, "    class {k};");
        let _ = writeln!(s, "    static method <{k}: {k} get()>;");
        let _ = writeln!(s, "    method <{k}: int size()>;");
        let _ = writeln!(s, "    method <{k}: boolean ready()>;");
        let _ = writeln!(s, "    method <{k}: java.lang.String label(java.lang.String,long)>;");
        let _ = writeln!(s, "    method <{k}: {j} next(int)>;");
        let _ = writeln!(s, "    method <{k}: void accept({j})>;");
    }
    s.push_str("}\n");
    s
}

struct MethodDecl {
    name: String,
    params: Vec<&'static str>,
    ret: &'static str,
}

impl MethodDecl {
    fn sig(&self) -> String {
        format!("<app.Gen: {} {}({})>", self.ret, self.name, self.params.join(","))
    }
}

struct BodyGen<'a> {
    rng: &'a mut ChaCha8Rng,
    decls: &'a [MethodDecl],
    me: usize,
    lines: Vec<String>,
    pool: Vec<(String, &'static str)>,
    vars: usize,
    labels: usize,
}

impl BodyGen<'_> {
    fn var(&mut self) -> String {
        self.vars += 1;
        format!("$v{}", self.vars)
    }

    fn emit(&mut self, line: String) {
        self.lines.push(format!("        {line}"));
    }

    fn define(&mut self, ty: &'static str, rhs: String) -> String {
        let v = self.var();
        self.emit(format!("{v} = {rhs};"));
        self.pool.push((v.clone(), ty));
        v
    }

    fn constant(&mut self, ty: &str) -> String {
        match ty {
            "int" => self.rng.gen_range(0..100).to_string(),
            "long" => format!("{}L", self.rng.gen_range(0..1000)),
            "boolean" => if self.rng.gen_bool(0.5) { "true" } else { "false" }.to_string(),
            _ => format!("\"k{}\"", self.rng.gen_range(0..10)),
        }
    }

    /// An operand of type `ty`: an existing variable, a literal, or a fresh
    /// definition.
    fn operand(&mut self, ty: &'static str) -> String {
        let have: Vec<String> = self.pool.iter().filter(|(_, t)| *t == ty).map(|(v, _)| v.clone()).collect();
        if !have.is_empty() && self.rng.gen_bool(0.7) {
            return have.choose(self.rng).expect("nonempty").clone();
        }
        if !OBJ.contains(&ty) && self.rng.gen_bool(0.5) {
            return self.constant(ty);
        }
        self.produce(ty)
    }

    /// Emits a statement defining a new variable of type `ty`.
    fn produce(&mut self, ty: &'static str) -> String {
        let callees: Vec<usize> = (self.me + 1..self.decls.len()).filter(|&j| self.decls[j].ret == ty).collect();
        if !callees.is_empty() && self.rng.gen_bool(0.4) {
            let j = *callees.choose(self.rng).expect("nonempty");
            let args: Vec<String> = self.decls[j].params.clone().into_iter().map(|p| self.operand(p)).collect();
            let rhs = format!("staticinvoke {}({})", self.decls[j].sig(), args.join(", "));
            return self.define(ty, rhs);
        }
        match ty {
            "int" => {
                let k = *OBJ.choose(self.rng).expect("nonempty");
                let r = self.operand(k);
                self.define(ty, format!("virtualinvoke {r}.<{k}: int size()>()"))
            }
            "long" => self.define(ty, "staticinvoke <fw.Clock: long now()>()".into()),
            "boolean" => {
                let k = *OBJ.choose(self.rng).expect("nonempty");
                let r = self.operand(k);
                self.define(ty, format!("virtualinvoke {r}.<{k}: boolean ready()>()"))
            }
            "java.lang.String" => {
                if self.rng.gen_bool(0.3) {
                    let c = self.constant(ty);
                    return self.define(ty, c);
                }
                let k = *OBJ.choose(self.rng).expect("nonempty");
                let r = self.operand(k);
                let a = self.operand("java.lang.String");
                let b = self.operand("long");
                self.define(ty, format!("virtualinvoke {r}.<{k}: java.lang.String label(java.lang.String,long)>({a}, {b})"))
            }
            k => {
                if self.rng.gen_bool(0.5) {
                    self.define(k, format!("staticinvoke <{k}: {k} get()>()"))
                } else {
                    let p = prev_class(k);
                    let r = self.operand(p);
                    let i = self.operand("int");
                    self.define(k, format!("virtualinvoke {r}.<{p}: {k} next(int)>({i})"))
                }
            }
        }
    }

    /// Uses `v` as an argument or receiver of a framework call.
    fn consume(&mut self, v: &str, ty: &'static str) {
        match ty {
            "int" => {
                let k = *OBJ.choose(self.rng).expect("nonempty");
                let r = self.operand(k);
                self.define(next_class(k), format!("virtualinvoke {r}.<{k}: {} next(int)>({v})", next_class(k)));
            }
            "java.lang.String" => {
                let k = *OBJ.choose(self.rng).expect("nonempty");
                let r = self.operand(k);
                self.define("java.lang.String", format!("virtualinvoke {r}.<{k}: java.lang.String label(java.lang.String,long)>({v}, 1L)"));
            }
            "boolean" | "long" => {}
            k => {
                if self.rng.gen_bool(0.5) {
                    self.define("int", format!("virtualinvoke {v}.<{k}: int size()>()"));
                } else {
                    let p = prev_class(k);
                    let r = self.operand(p);
                    self.emit(format!("virtualinvoke {r}.<{p}: void accept({k})>({v});"));
                }
            }
        }
    }

    /// `if c goto else; x = ..; goto join; else: x = ..; join:`
    fn diamond(&mut self) {
        let ty = *PARAM_TYPES.choose(self.rng).expect("nonempty");
        let c = self.operand("boolean");
        let cond = if c.starts_with('$') { c } else { self.define("boolean", c) };
        self.labels += 1;
        let (l_else, l_join) = (format!("else{}", self.labels), format!("join{}", self.labels));
        let x = self.var();
        self.emit(format!("if {cond} goto {l_else};"));
        let saved = self.pool.clone();
        let v = self.produce(ty);
        self.emit(format!("{x} = ({ty}) {v};"));
        self.emit(format!("goto {l_join};"));
        self.pool = saved.clone();
        self.lines.push(format!("    {l_else}:"));
        let v = self.produce(ty);
        self.emit(format!("{x} = ({ty}) {v};"));
        self.pool = saved;
        self.lines.push(format!("    {l_join}:"));
        self.pool.push((x.clone(), ty));
        self.consume(&x, ty);
    }
}

/// A resolvable program of at most `limits.max_methods` static methods and
/// `limits.max_branches` diamonds, all deterministic in `seed`.
pub fn random_program(seed: u64, limits: GenLimits) -> RandomProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=limits.max_methods.max(1));
    let decls: Vec<MethodDecl> = (0..n)
        .map(|i| {
            let arity = rng.gen_range(0..=2);
            MethodDecl {
                name: format!("m{i}"),
                params: (0..arity).map(|_| *PARAM_TYPES.choose(&mut rng).expect("nonempty")).collect(),
                ret: *RETURN_TYPES.choose(&mut rng).expect("nonempty"),
            }
        })
        .collect();
    let mut branches_left = rng.gen_range(0..=limits.max_branches);
    let branches = branches_left;

    let mut src = framework_block();
    src.push_str("\nclass app.Gen {\n");
    for i in 0..n {
        let d = &decls[i];
        let _ = writeln!(src, "    public static {} {}({}) {{", d.ret, d.name, d.params.join(","));
        let mut g = BodyGen { rng: &mut rng, decls: &decls, me: i, lines: Vec::new(), pool: Vec::new(), vars: 0, labels: 0 };
        for (k, ty) in d.params.iter().enumerate() {
            let v = g.var();
            g.emit(format!("{v} := @parameter{k}: {ty};"));
            g.pool.push((v, ty));
        }
        let steps = g.rng.gen_range(1..=4);
        for s in 0..steps {
            // the last method takes what is left so the branch count is exact
            let want = branches_left > 0 && (i + 1 == n && s + 1 == steps || g.rng.gen_bool(0.3));
            if want {
                branches_left -= 1;
                g.diamond();
            } else {
                let ty = *PARAM_TYPES.choose(g.rng).expect("nonempty");
                let v = g.produce(ty);
                g.consume(&v, ty);
            }
        }
        while branches_left > 0 && i + 1 == n {
            branches_left -= 1;
            g.diamond();
        }
        if d.ret == "void" {
            g.emit("return;".into());
        } else {
            let v = g.operand(d.ret);
            g.emit(format!("return {v};"));
        }
        for l in &g.lines {
            src.push_str(l);
            src.push('\n');
        }
        src.push_str("    }\n");
    }
    src.push_str("}\n");
    let program = parse_program(&src).unwrap_or_else(|d| panic!("generated program does not parse: {d:?}\n{src}"));
    RandomProgram { seed, source: src, program, methods: n, branches }
}
