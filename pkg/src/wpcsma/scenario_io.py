"""Scenario files: unit-suffixed JSON in, validated SI Scenario out.

Field names carry their unit (`sigma_us`, `p_tx_mw`, `rate_mbps`, `l_bytes`)
so published table values can be transcribed verbatim; conversion to SI
happens exactly once here. Saving a loaded scenario re-emits the original
numbers, so load -> save -> load is an identity.
"""

from __future__ import annotations

import json
from pathlib import Path

from .params import (DutyCycle, InvalidParameterError, LinkParams, Node,
                     PowerProfile, ProtocolParams, Scenario)

_PROTOCOL_FIELDS = {
    "sigma_us": ("sigma", 1e-6),
    "t_sifs_us": ("t_sifs", 1e-6),
    "t_difs_us": ("t_difs", 1e-6),
    "t_ack_us": ("t_ack", 1e-6),
    "t_rts_us": ("t_rts", 1e-6),
    "t_cts_us": ("t_cts", 1e-6),
    "t_phy_hdr_us": ("t_phy_hdr", 1e-6),
    "l_mac_hdr_bytes": ("l_mac_hdr", 8.0),
    "l_shdr_bytes": ("l_shdr", 8.0),
    "l_fcs_bytes": ("l_fcs", 8.0),
}

_NODE_FIELDS = {
    "l_bytes": 8.0,
    "rate_mbps": 1e6,
    "n_max": 1,
    "h_slots": 1,
    "g_slots": 1,
    "p_tx_mw": 1e-3,
    "p_rx_mw": 1e-3,
    "p_listen_mw": 1e-3,
    "p_acq_mw": 1e-3,
    "p_proc_mw": 1e-3,
    "e_bg_uj": 1e-6,
    "phi_mw": 1e-3,
}
_NODE_OPTIONAL = {"e_bg_uj": 0.0}


def _number(doc: dict, key: str, where: str) -> float:
    if key not in doc:
        raise InvalidParameterError(f"{where}: missing field {key}")
    v = doc[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise InvalidParameterError(f"{where}: field {key} must be a number")
    return float(v)


def _check_keys(doc: dict, allowed, where: str) -> None:
    unknown = set(doc) - set(allowed)
    if unknown:
        raise InvalidParameterError(
            f"{where}: unknown field(s) {sorted(unknown)}")


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate and convert a parsed unit-suffixed document."""
    if not isinstance(doc, dict):
        raise InvalidParameterError("scenario document must be an object")
    _check_keys(doc, {"name", "comment", "protocol", "nodes"}, "scenario")
    if "protocol" not in doc or "nodes" not in doc:
        raise InvalidParameterError("scenario: missing protocol or nodes")

    pdoc = doc["protocol"]
    _check_keys(pdoc, _PROTOCOL_FIELDS, "protocol")
    proto = ProtocolParams(**{
        attr: _number(pdoc, key, "protocol") * scale
        for key, (attr, scale) in _PROTOCOL_FIELDS.items()
    })

    if not isinstance(doc["nodes"], list) or not doc["nodes"]:
        raise InvalidParameterError("scenario: nodes must be a non-empty list")
    nodes = []
    for idx, ndoc in enumerate(doc["nodes"]):
        where = f"node {idx}"
        _check_keys(ndoc, _NODE_FIELDS, where)
        vals = {}
        for key, scale in _NODE_FIELDS.items():
            if key in _NODE_OPTIONAL and key not in ndoc:
                vals[key] = _NODE_OPTIONAL[key]
            else:
                vals[key] = _number(ndoc, key, where) * scale
        for key in ("n_max", "h_slots", "g_slots"):
            if vals[key] != int(vals[key]):
                raise InvalidParameterError(f"{where}: {key} must be an integer")
        try:
            node = Node(
                link=LinkParams(l=vals["l_bytes"], rate=vals["rate_mbps"]),
                duty=DutyCycle(h=int(vals["h_slots"]), g=int(vals["g_slots"]),
                               n_max=int(vals["n_max"])),
                power=PowerProfile(p_tx=vals["p_tx_mw"], p_rx=vals["p_rx_mw"],
                                   p_listen=vals["p_listen_mw"],
                                   p_acq=vals["p_acq_mw"],
                                   p_proc=vals["p_proc_mw"],
                                   e_bg=vals["e_bg_uj"], phi=vals["phi_mw"]),
            )
        except InvalidParameterError as err:
            raise InvalidParameterError(f"{where}: {err}") from None
        nodes.append(node)

    return Scenario(protocol=proto, nodes=tuple(nodes),
                    name=str(doc.get("name", "scenario")), unit_doc=doc)


def scenario_to_dict(scn: Scenario) -> dict:
    """Unit-suffixed document for a Scenario (verbatim if it was loaded)."""
    if scn.unit_doc is not None:
        return scn.unit_doc
    doc = {"name": scn.name, "protocol": {}, "nodes": []}
    for key, (attr, scale) in _PROTOCOL_FIELDS.items():
        doc["protocol"][key] = getattr(scn.protocol, attr) / scale
    for node in scn.nodes:
        doc["nodes"].append({
            "l_bytes": node.link.l / 8.0,
            "rate_mbps": node.link.rate / 1e6,
            "n_max": node.duty.n_max,
            "h_slots": node.duty.h,
            "g_slots": node.duty.g,
            "p_tx_mw": node.power.p_tx / 1e-3,
            "p_rx_mw": node.power.p_rx / 1e-3,
            "p_listen_mw": node.power.p_listen / 1e-3,
            "p_acq_mw": node.power.p_acq / 1e-3,
            "p_proc_mw": node.power.p_proc / 1e-3,
            "e_bg_uj": node.power.e_bg / 1e-6,
            "phi_mw": node.power.phi / 1e-3,
        })
    return doc


def load_scenario(path) -> Scenario:
    """Load, validate and convert a scenario file."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise InvalidParameterError(f"cannot read scenario file: {err}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise InvalidParameterError(f"scenario file is not valid JSON: {err}") from None
    return scenario_from_dict(doc)


def save_scenario(scn: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scn), indent=2) + "\n")


def bundled_scenario(name: str) -> Scenario:
    """One of the packaged example scenarios ('example1' or 'example2')."""
    root = Path(__file__).parent / "data"
    path = root / f"{name}.json"
    if not path.exists():
        raise InvalidParameterError(
            f"no bundled scenario named {name!r}; have "
            f"{sorted(p.stem for p in root.glob('*.json'))}")
    return load_scenario(path)
