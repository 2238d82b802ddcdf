"""Load Alice's admissions model, evaluate one context, then ask a counterfactual.

Run: python3 demos/01_scm_basics.py
"""

from fairpool import corpus, counterfactual, evaluate, parse_model, sample_context

alice = parse_model(corpus.read("alice.scm"))
print("exogenous:", ", ".join(alice.exogenous))
print("edges into Y:", sorted(a for a, b in alice.diagram.edges if b == "Y"))

# one context drawn from the model's own distributions
u = sample_context(alice, seed=0, index=0)
values = evaluate(alice, u)
print("\ncontext:", {k: round(v, 3) for k, v in u.items()})
print("Gnd =", values["Gnd"], " Y =", round(values["Y"], 4))

# same background, gender flipped by intervention
flipped = 1 - values["Gnd"]
y_cf = counterfactual(alice, u, {"Gnd": flipped}, "Y")
print(f"had Gnd been {flipped:g}: Y = {y_cf:.4f}")

print("\ndescendants of Gnd:", sorted(alice.diagram.descendants({"Gnd"})))
