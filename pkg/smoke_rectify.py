import time

t0 = time.time()
from opcat.fincat import check_cat_diagram, check_category, check_functor, check_nat_transformation
from opcat.operad import Ass, Com, monoid_ass_algebra, com_monoid_algebra
from opcat.rectify import (
    OperadMap,
    algebra_action,
    canonical_element,
    change_operads,
    check_evaluation,
    check_operad_map,
    check_partial_algebra,
    check_span,
    check_w_naturality,
    comparison_J,
    epsilon,
    fg_diagram,
    fg_object,
    grothendieck,
    rectified_algebra,
    section,
    terminal_operad_map,
    thomason_check,
    w_comparison,
)
from opcat.trees import corolla, from_literal
from opcat.operad import hat_algebra

ass = Ass(arity_max=4)
z2 = monoid_ass_algebra("Z2", (0, 1), lambda a, b: (a + b) % 2, 0, ass)

print("== hat ==")
G = hat_algebra(ass, z2, 3)
print("levels:", sorted(G.fiber))

print("== fiber over corolla(2) ==")
f2 = fg_object(G, corolla(2))
rep = check_category(f2)
print(f2.name, len(f2.objects), "objects", len(f2.morphisms), "morphisms", "ok" if rep.ok else rep.summary())

print("== fiber over ((*,*)) and ((*),(*)) ==")
for lit in ["((*,*))", "((*),(*))", "((*),*)"]:
    fc = fg_object(G, from_literal(lit))
    rep = check_category(fc)
    print(lit, len(fc.objects), "objects", "ok" if rep.ok else rep.summary())

print("== diagram at E<=2 ==")
t = time.time()
dg = fg_diagram(G, 2, 3)
print("built in", round(time.time() - t, 2), "s;", len(dg.base.objects), "base objects")
t = time.time()
rep = check_cat_diagram(dg)
print("diagram check:", "ok" if rep.ok else rep.summary(), round(time.time() - t, 2), "s")

print("== rectified algebra ==")
t = time.time()
R = rectified_algebra(z2, 2, 3)
print("built in", round(time.time() - t, 2), "s;", len(R.category.objects), "objects,",
      len(R.category.morphisms), "morphisms")
t = time.time()
rep = check_category(R.category)
print("total category:", "ok" if rep.ok else rep.summary(), round(time.time() - t, 2), "s")

print("== partial action ==")
t = time.time()
rep = check_partial_algebra(R)
print("action laws:", "ok" if rep.ok else rep.summary(), f"({rep.checked} checks,", round(time.time() - t, 2), "s)")

print("== evaluation ==")
t = time.time()
rep = check_evaluation(R)
print("evaluation:", "ok" if rep.ok else rep.summary(), f"({rep.checked} checks,", round(time.time() - t, 2), "s)")

print("== root comparison ==")
t = time.time()
rc = comparison_J(R)
rep = check_functor(rc.functor)
print("J functor:", "ok" if rep.ok else rep.summary())
rep = check_nat_transformation(rc.to_identity)
print("J => incl:", "ok" if rep.ok else rep.summary())
rep = check_nat_transformation(rc.to_section)
print("J => replant:", "ok" if rep.ok else rep.summary(), round(time.time() - t, 2), "s")

print("== thomason ==")
t = time.time()
rep = thomason_check(R)
print("gluing/mapping:", "ok" if rep.ok else rep.summary(), f"({rep.checked} checks,", round(time.time() - t, 2), "s)")

print("== w comparison n=1,2 ==")
t = time.time()
for n in (1, 2):
    wc = w_comparison(R, n)
    r1 = check_functor(wc.tau)
    r2 = check_functor(wc.tau_inv)
    ok_iso = all(
        wc.tau_inv.omap[wc.tau.omap[o]] == o for o in wc.total.objects
    ) and all(
        wc.tau.omap[wc.tau_inv.omap[o]] == o for o in wc.window.objects
    ) and all(
        wc.tau_inv.mmap[wc.tau.mmap[m]] == m for m in wc.total.morphisms
    ) and all(
        wc.tau.mmap[wc.tau_inv.mmap[m]] == m for m in wc.window.morphisms
    )
    retract = all(
        wc.collapse.omap[wc.plant.omap[C]] == C for C in R.levels.fiber[n].objects
    ) and all(
        wc.collapse.mmap[wc.plant.mmap[cm]] == cm for cm in R.levels.fiber[n].morphisms
    )
    print(f"n={n}:", len(wc.total.objects), "forest objects;",
          "tau ok" if r1.ok else r1.summary(),
          "inv ok" if r2.ok else r2.summary(),
          "iso" if ok_iso else "NOT ISO",
          "retract" if retract else "NO RETRACT")
print("built in", round(time.time() - t, 2), "s")

print("== w naturality ==")
t = time.time()
rep = check_w_naturality(R, 2)
print("naturality:", "ok" if rep.ok else rep.summary(), f"({rep.checked} checks,", round(time.time() - t, 2), "s)")

print("== operad change ==")
t = time.time()
com = Com(arity_max=4)
phi = terminal_operad_map(ass, com)
rep = check_operad_map(phi, max_arity=3)
print("operad map:", "ok" if rep.ok else rep.summary())
zc = com_monoid_algebra("Z2c", (0, 1), lambda a, b: (a + b) % 2, 0, com)
span = change_operads(phi, z2, 2, 3)
rep = check_span(span, max_arity=2)
print("span:", "ok" if rep.ok else rep.summary(), round(time.time() - t, 2), "s")
t = time.time()
rep = check_category(span.twisted.category)
print("twisted total:", "ok" if rep.ok else rep.summary(), round(time.time() - t, 2), "s")
rep = check_partial_algebra(span.twisted, max_arity=2)
print("twisted action:", "ok" if rep.ok else rep.summary(), round(time.time() - t, 2), "s")

print("TOTAL", round(time.time() - t0, 2), "s")
