"""Merge the experts' fair distributions with each pooling operator.

Run: python3 demos/04_opinion_pooling.py
"""

from fairpool import (FairFeatureSet, PoolingKind, PoolingOperator, corpus, fair_predict,
                      kde, pool_samples, pooling_removal)
from fairpool.pooling import decision_report

models, spec, _, records = corpus.load()
diagram = pooling_removal(models, spec)
app1 = records[0]
dists = [fair_predict(m, FairFeatureSet.from_diagram(diagram, m), app1.resolved, 100_000, seed=0)
         for m in models]

for kind in PoolingKind:
    pooled = pool_samples(PoolingOperator(kind), dists)
    spread = f", variance {pooled.variance:.4f}" if pooled.n > 1 else ""
    print(f"{kind.value:22s} mean {pooled.mean:.4f}{spread}")

report = decision_report(dists, PoolingOperator(), app1.label, [m.label for m in models])
for e, d in zip(report["experts"], dists):
    curve = kde(d.samples)
    print(f"{e['model']}: modes {[round(x, 3) for x in curve.modes()]}, "
          f"multimodal={e['multimodal']}")
print("decision for", report["candidate"], "=", round(report["pooled"], 4))
