"""
Why no conservative repair operator removes every overspecification
===================================================================

A repair operator rewrites program indices.  Call it conservative when it
never touches a program that is already fine.  This walkthrough builds the
self-referential program e* for two operators and shows what happens.
"""

# %%
# The scenario and the operators
# ------------------------------
from overspec.repair import construct_overspecified_fixed_point, get_operator
from overspec.scenario import default_scenario

cfg = default_scenario()
kit = cfg.witness_kit
print(f"anchor instance x0 = {kit.x0!r}, overspecified output y+ = {kit.y_plus!r}")

# %%
# The identity operator is trivially conservative.  Its fixed point e* asks
# "does PHI leave me alone?" and, since it does, emits y+ on the pad family.
rep = construct_overspecified_fixed_point(get_operator("identity", cfg), cfg, n_cap=3, budget=2_000)
print("e* =", rep.e_star)
print("Phi(e*) == e*:", rep.phi_of_e_star_equals_e_star)
print("verdict on lengths <= 3:", rep.detection.verdict, "witness", repr(rep.detection.witness))

# %%
# The detector-backed operator actually searches for witnesses.  On e* the
# search calls e*, which calls the operator again; the nested calls share a
# single step allowance, run it dry, and the operator gives up.
rep = construct_overspecified_fixed_point(get_operator("detector-backed", cfg), cfg, n_cap=3, budget=2_000)
print("Phi(e*) == e*:", rep.phi_of_e_star_equals_e_star)
for x in (kit.x0, kit.x0 + cfg.pad, kit.x0 + cfg.pad * 2):
    print(f"  e*({x!r}) -> {rep.gadget_branch_taken[x]}")

# %%
# An operator that is not conservative can escape: mapping everything to the
# constant epsilon program makes the gadget fall into its epsilon branch.
rep = construct_overspecified_fixed_point(get_operator("constant-epsilon", cfg), cfg, n_cap=3, budget=2_000)
print("Phi(e*) == e*:", rep.phi_of_e_star_equals_e_star, "| verdict:", rep.detection.verdict)
print("branches taken:", sorted(set(rep.gadget_branch_taken.values())))
