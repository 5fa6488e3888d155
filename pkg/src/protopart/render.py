"""Text reports and Graphviz output."""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal

from .model import Assignment, Domains, Guarantee, Network, domain_guarantee, instance_guarantee
from .partition import Metrics, PolicyEntry
from .rules import CONF, INTG, Atom

# fill colour and line style per guarantee class
STYLE_UNKNOWN = ("white", "solid")
STYLE_NONE = ("gray", "solid")
STYLE_CONF = ("red", "dashed")
STYLE_INTG = ("blue", "dotted")
STYLE_BOTH = ("purple", "dashed,bold")  # Graphviz has no dash-dot line


def style_for(g: Guarantee | None) -> tuple[str, str]:
    if g is None:
        return STYLE_UNKNOWN
    if g.conf and g.intg:
        return STYLE_BOTH
    if g.conf:
        return STYLE_CONF
    if g.intg:
        return STYLE_INTG
    return STYLE_NONE


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _node(net: Network, name: str, asg: Assignment | None) -> str:
    inst = net.instance(name)
    g = instance_guarantee(inst, asg) if asg is not None else None
    color, style = style_for(g)
    border = "black" if g is None else color
    label = _q(name)[:-1] + "\\n" + _q(inst.kind)[1:]
    return (
        f"{_q(name)} [label={label}, style={_q('filled,' + style)}, "
        f"fillcolor={_q(color)}, color={_q(border)}];"
    )


def render_dot(net: Network, asg: Assignment | None = None, domains: Domains | None = None) -> str:
    """DOT text; nodes styled by solved guarantees, clusters per domain."""
    lines = [f"digraph {_q(net.name or 'model')} {{", "  rankdir=LR;", "  node [shape=box];"]
    if domains is not None:
        for d in domains:
            lines.append(f"  subgraph {_q('cluster_' + d.id)} {{")
            label = d.id
            if asg is not None:
                dg = domain_guarantee(d, net, asg)
                label += f" (conf={_tf(dg.conf)}, intg={_tf(dg.intg)})"
            lines.append(f"    label={_q(label)};")
            for name in sorted(d.members):
                lines.append("    " + _node(net, name, asg))
            lines.append("  }")
    else:
        for name in net.instances:
            lines.append("  " + _node(net, name, asg))
    for ch in net.channels:
        attrs = [f"label={_q(ch.out_port + ' -> ' + ch.in_port)}"]
        if asg is not None:
            color, style = style_for(Guarantee(asg[Atom(ch.src_port, CONF)], asg[Atom(ch.src_port, INTG)]))
            attrs += [f"color={_q(color)}", f"style={_q(style)}"]
        lines.append(f"  {_q(ch.src)} -> {_q(ch.dst)} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _tf(v: bool) -> str:
    return "true" if v else "false"


def percent(part: int, whole: int) -> str:
    """``part / whole`` as a percentage with one decimal, rounded half-up."""
    if whole == 0:
        return "n/a"
    value = (Decimal(part) * 100 / Decimal(whole)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return f"{value}%"


def reduction(partitioned: int, baseline: int) -> str:
    """``1 - partitioned / baseline`` as a percentage."""
    if baseline == 0:
        return "n/a"
    return percent(baseline - partitioned, baseline)


_COLUMNS = ("", "Processes", "IPC", "None", "Integrity", "Conf+Integrity", "TCB")


def metrics_table(rows: list[tuple[str, Metrics]]) -> str:
    body = [
        (label, str(m.process_count), str(m.ipc_channel_count), str(m.tcb_none),
         str(m.tcb_intg), str(m.tcb_conf_intg), str(m.tcb_total))
        for label, m in rows
    ]
    widths = [max(len(r[i]) for r in [_COLUMNS, *body]) for i in range(len(_COLUMNS))]
    out = []
    for r in [_COLUMNS, *body]:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        out.append("  ".join(cells).rstrip())
    return "\n".join(out) + "\n"


def metrics_report(monolithic: Metrics, unmerged: Metrics, result: Metrics, strategy: str) -> str:
    """Table plus reductions and machine-readable lines.

    Process and IPC reductions compare against one process per instance,
    TCB reductions against the monolithic build where everything is trusted.
    """
    rows = [("Monolithic", monolithic)]
    if strategy != "none":
        rows.append(("none", unmerged))
    rows.append((strategy, result))
    lines = [metrics_table(rows).rstrip("\n"), ""]
    lines.append(f"process reduction: {reduction(result.process_count, unmerged.process_count)}")
    lines.append(f"ipc reduction: {reduction(result.ipc_channel_count, unmerged.ipc_channel_count)}")
    lines.append(f"tcb reduction: {reduction(result.tcb_total, monolithic.tcb_total)}")
    lines.append(f"tcb share: {percent(result.tcb_total, monolithic.tcb_total)}")
    lines.append(f"conf+intg share: {percent(result.tcb_conf_intg, monolithic.tcb_total)}")
    lines.append("")
    lines.append(metrics_kv(result))
    return "\n".join(lines)


def metrics_kv(m: Metrics) -> str:
    return (
        f"process_count={m.process_count}\n"
        f"ipc_channels={m.ipc_channel_count}\n"
        f"tcb_none={m.tcb_none}\n"
        f"tcb_intg={m.tcb_intg}\n"
        f"tcb_conf_intg={m.tcb_conf_intg}\n"
    )


def policy_text(policy: list[PolicyEntry]) -> str:
    return "".join(f"{p}\n" for p in policy)
