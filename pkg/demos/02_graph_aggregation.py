"""Pool Alice's and Bob's causal graphs into one fair diagram, both orders.

Run: python3 demos/02_graph_aggregation.py
"""

from fairpool import AggregationConfig, Order, aggregate, corpus, format_dag

models, spec, _, _ = corpus.load()
graphs = [m.diagram for m in models]

for order in Order:
    result = aggregate(graphs, spec, AggregationConfig(order=order))
    print(f"== {order.value}")
    print("removed:", ", ".join(sorted(result.removed)) or "-")
    for d in result.rejected:
        print(f"rejected {d.edge[0]} -> {d.edge[1]}: "
              f"{sum(d.judgment.votes)}/{len(d.judgment.votes)} votes ({d.reason})")
    print(format_dag(result.diagram))
