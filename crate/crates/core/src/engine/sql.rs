use crate::data::Context;

use super::QuerySpec;

/// The adjusted query in `WITH Blocks ... Weights ...` form: per-block
/// averages joined with block weights over blocks containing both
/// treatment values. `n` stands for the number of matched rows.
pub fn rewritten_sql(table: &str, q: &QuerySpec, covariates: &[String]) -> String {
    let t = &q.treatment;
    let x = &q.groupby;
    let arms = Context::all().and_in(t.clone(), [q.t0.clone(), q.t1.clone()]);
    let filter = q.context.clone().and(&arms).to_sql();
    let list = |parts: &[&[String]]| -> String { parts.iter().flat_map(|p| p.iter()).cloned().collect::<Vec<_>>().join(", ") };
    let t_only = [t.clone()];
    let avgs: Vec<String> = q.outcomes.iter().enumerate().map(|(i, y)| format!("avg({y}) AS Avg{}", i + 1)).collect();
    let sums: Vec<String> = (1..=q.outcomes.len()).map(|i| format!("sum(Avg{i} * W)")).collect();
    let joins: Vec<String> = covariates.iter().chain(x).map(|a| format!("Blocks.{a} = Weights.{a}")).collect();
    let mut sql = String::new();
    sql.push_str("WITH Blocks AS (\n");
    sql.push_str(&format!("  SELECT {}, {}\n", list(&[&t_only, x, covariates]), avgs.join(", ")));
    sql.push_str(&format!("  FROM {table}\n  WHERE {filter}\n"));
    sql.push_str(&format!("  GROUP BY {}),\n", list(&[&t_only, covariates, x])));
    sql.push_str("Weights AS (\n");
    let zx = list(&[x, covariates]);
    let head = if zx.is_empty() { String::new() } else { format!("{zx}, ") };
    sql.push_str(&format!("  SELECT {head}count(*)/n AS W\n"));
    sql.push_str(&format!("  FROM {table}\n  WHERE {filter}\n"));
    let zx_group = list(&[covariates, x]);
    if !zx_group.is_empty() {
        sql.push_str(&format!("  GROUP BY {zx_group}\n"));
    }
    sql.push_str(&format!("  HAVING count(DISTINCT {t}) = 2)\n"));
    sql.push_str(&format!("SELECT {}, {}\n", list(&[&t_only, x]), sums.join(", ")));
    sql.push_str("FROM Blocks, Weights\n");
    if !joins.is_empty() {
        sql.push_str(&format!("WHERE {}\n", joins.join(" AND ")));
    }
    sql.push_str(&format!("GROUP BY {}", list(&[&t_only, x])));
    sql
}
