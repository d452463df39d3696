"""Parsers turning documents into model values.

Three input formats:

* CiliumNetworkPolicy YAML (the accepted subset): ``endpointSelector``
  with ``matchLabels``, ingress rules with ``fromCIDRSet`` /
  ``fromEndpoints`` / ``toPorts``, egress rules with ``toCIDRSet`` /
  ``toPorts``.  ``expand_rules`` flattens one document into single-pair
  policies, one per (rule, source, port) combination.
* Topology YAML: named endpoints plus application records referencing
  them, ready to deploy.
* Scenario YAML: a ``mode`` and a ``steps`` list; each step is one of the
  four scenario actions keyed by name, referencing endpoints and policies
  by the symbolic names earlier steps declared.

Scenario and topology endpoint fields use sentinel values for
"unconstrained" (cidr 0.0.0.0/0, namespace "-", port 0, empty label);
those are normalized to absent here.  Policy documents are not sentinel
filtered: a 0.0.0.0/0 CIDR in a rule is a real match-everything block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

import yaml

from .errors import (
    DuplicateSymbol,
    EmptyExpansion,
    InvalidPort,
    MalformedYaml,
    UnknownEndpointReference,
    UnsupportedApiVersion,
    UnsupportedKind,
)
from .matching import MatchMode
from .model import (
    Cidr,
    Direction,
    Endpoint,
    Namespace,
    Policy,
    PolicyOrigin,
    canonical_endpoint_text,
    new_system,
    normalize_fields,
    parse_cidr,
    policy_from_dict,
    policy_to_dict,
)
from .scenario import (
    EXPECT_OK,
    Expectation,
    ScenarioStep,
    create_endpoint,
    deploy_application,
)

API_VERSION = "cilium.io/v2"
KIND = "CiliumNetworkPolicy"
NAMESPACE_LABEL_KEY = "io.kubernetes.pod.namespace"

# Deployed namespaces carry id 1 by convention (0 is the sentinel id), so
# ingested policies compare equal to scenario-created endpoints.
DEFAULT_NAMESPACE_ID = 1


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys instead of
    silently keeping the last one."""


def _strict_mapping(loader, node, deep=False):
    mapping = {}
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in mapping:
            raise yaml.constructor.ConstructorError(
                None, None, f"duplicate mapping key {key!r}", key_node.start_mark
            )
        mapping[key] = loader.construct_object(value_node, deep=deep)
    return mapping


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _strict_mapping
)


def _load_yaml(text: str, what: str):
    try:
        return yaml.load(text, Loader=_StrictLoader)
    except yaml.YAMLError as exc:
        raise MalformedYaml(f"{what}: {exc}") from exc


def _require_mapping(value, where: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise MalformedYaml(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _require_list(value, where: str) -> list:
    if not isinstance(value, list):
        raise MalformedYaml(f"{where} must be a list, got {type(value).__name__}")
    return value


def _require_str(value, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise MalformedYaml(f"{where} must be a non-empty string, got {value!r}")
    return value


def _parse_port(value, where: str) -> int:
    """Accepts quoted decimal strings (the Cilium convention) or ints."""
    if isinstance(value, str):
        if not value.isdigit():
            raise InvalidPort(f"{where}: port {value!r} is not a decimal number")
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidPort(f"{where}: port must be a number, got {value!r}")
    if not 1 <= value <= 65535:
        raise InvalidPort(f"{where}: port {value} out of range 1-65535")
    return value


def _parse_match_labels(value, where: str) -> dict:
    labels = _require_mapping(value, where)
    out = {}
    for key, item in labels.items():
        if not isinstance(key, str) or not isinstance(item, str):
            raise MalformedYaml(f"{where}: matchLabels entries must map strings to strings")
        out[key] = item
    return out


@dataclass(frozen=True)
class IngressRule:
    """One ingress rule: sources (CIDRs and/or endpoint selectors) and ports."""

    from_cidr_set: tuple[Cidr, ...] = ()
    from_endpoints: tuple[Mapping[str, str], ...] = ()
    to_ports: tuple[int, ...] = ()


@dataclass(frozen=True)
class EgressRule:
    """One egress rule: destination CIDRs and ports."""

    to_cidr_set: tuple[Cidr, ...]
    to_ports: tuple[int, ...] = ()


@dataclass(frozen=True)
class CiliumPolicyDoc:
    api_version: str
    kind: str
    name: str
    namespace: str
    endpoint_selector: Mapping[str, str]
    ingress_rules: tuple[IngressRule, ...] = ()
    egress_rules: tuple[EgressRule, ...] = ()
    warnings: tuple[str, ...] = ()


def _parse_to_ports(value, where: str, warnings: list) -> tuple[int, ...]:
    ports = []
    for i, block in enumerate(_require_list(value, where)):
        block = _require_mapping(block, f"{where}[{i}]")
        for key in block:
            if key != "ports":
                warnings.append(f"{where}[{i}]: unknown key {key!r}")
        for j, entry in enumerate(_require_list(block.get("ports", []), f"{where}[{i}].ports")):
            entry = _require_mapping(entry, f"{where}[{i}].ports[{j}]")
            for key in entry:
                if key != "port":
                    warnings.append(f"{where}[{i}].ports[{j}]: unknown key {key!r}")
            if "port" not in entry:
                raise MalformedYaml(f"{where}[{i}].ports[{j}]: missing 'port'")
            ports.append(_parse_port(entry["port"], f"{where}[{i}].ports[{j}]"))
    return tuple(ports)


def _parse_cidr_set(value, where: str, warnings: list) -> tuple[Cidr, ...]:
    cidrs = []
    for i, entry in enumerate(_require_list(value, where)):
        entry = _require_mapping(entry, f"{where}[{i}]")
        for key in entry:
            if key != "cidr":
                warnings.append(f"{where}[{i}]: unknown key {key!r}")
        if "cidr" not in entry:
            raise MalformedYaml(f"{where}[{i}]: missing 'cidr'")
        cidrs.append(parse_cidr(_require_str(entry["cidr"], f"{where}[{i}].cidr")))
    return tuple(cidrs)


def _parse_ingress_rule(rule, index: int, warnings: list) -> IngressRule:
    where = f"spec.ingress[{index}]"
    rule = _require_mapping(rule, where)
    for key in rule:
        if key not in ("fromCIDRSet", "fromEndpoints", "toPorts"):
            warnings.append(f"{where}: unknown key {key!r}")
    from_cidrs = ()
    if "fromCIDRSet" in rule:
        from_cidrs = _parse_cidr_set(rule["fromCIDRSet"], f"{where}.fromCIDRSet", warnings)
    from_endpoints = []
    if "fromEndpoints" in rule:
        for i, entry in enumerate(_require_list(rule["fromEndpoints"], f"{where}.fromEndpoints")):
            entry = _require_mapping(entry, f"{where}.fromEndpoints[{i}]")
            for key in entry:
                if key != "matchLabels":
                    warnings.append(f"{where}.fromEndpoints[{i}]: unknown key {key!r}")
            from_endpoints.append(
                _parse_match_labels(
                    entry.get("matchLabels", {}), f"{where}.fromEndpoints[{i}].matchLabels"
                )
            )
    if not from_cidrs and not from_endpoints:
        raise MalformedYaml(f"{where}: needs at least one of fromCIDRSet, fromEndpoints")
    to_ports = ()
    if "toPorts" in rule:
        to_ports = _parse_to_ports(rule["toPorts"], f"{where}.toPorts", warnings)
    return IngressRule(
        from_cidr_set=from_cidrs, from_endpoints=tuple(from_endpoints), to_ports=to_ports
    )


def _parse_egress_rule(rule, index: int, warnings: list) -> EgressRule:
    where = f"spec.egress[{index}]"
    rule = _require_mapping(rule, where)
    for key in rule:
        if key not in ("toCIDRSet", "toPorts"):
            warnings.append(f"{where}: unknown key {key!r}")
    if "toCIDRSet" not in rule:
        raise MalformedYaml(f"{where}: missing 'toCIDRSet'")
    to_cidrs = _parse_cidr_set(rule["toCIDRSet"], f"{where}.toCIDRSet", warnings)
    if not to_cidrs:
        raise MalformedYaml(f"{where}: toCIDRSet must not be empty")
    to_ports = ()
    if "toPorts" in rule:
        to_ports = _parse_to_ports(rule["toPorts"], f"{where}.toPorts", warnings)
    return EgressRule(to_cidr_set=to_cidrs, to_ports=to_ports)


def parse_cilium_policy(text: str) -> CiliumPolicyDoc:
    """Parse the accepted CiliumNetworkPolicy subset.

    Unknown keys inside ``spec`` are collected as warnings on the returned
    document; anything malformed in the accepted subset raises.
    """
    data = _require_mapping(_load_yaml(text, "policy document"), "policy document")
    api_version = data.get("apiVersion")
    if api_version != API_VERSION:
        raise UnsupportedApiVersion(f"apiVersion must be {API_VERSION!r}, got {api_version!r}")
    kind = data.get("kind")
    if kind != KIND:
        raise UnsupportedKind(f"kind must be {KIND!r}, got {kind!r}")
    metadata = _require_mapping(data.get("metadata"), "metadata")
    name = _require_str(metadata.get("name"), "metadata.name")
    namespace = _require_str(metadata.get("namespace"), "metadata.namespace")
    spec = _require_mapping(data.get("spec"), "spec")

    warnings: list = []
    for key in spec:
        if key not in ("endpointSelector", "ingress", "egress"):
            warnings.append(f"spec: unknown key {key!r}")
    selector_block = _require_mapping(spec.get("endpointSelector"), "spec.endpointSelector")
    for key in selector_block:
        if key != "matchLabels":
            warnings.append(f"spec.endpointSelector: unknown key {key!r}")
    selector = _parse_match_labels(
        selector_block.get("matchLabels", {}), "spec.endpointSelector.matchLabels"
    )

    ingress_rules = tuple(
        _parse_ingress_rule(rule, i, warnings)
        for i, rule in enumerate(_require_list(spec.get("ingress", []), "spec.ingress"))
    )
    egress_rules = tuple(
        _parse_egress_rule(rule, i, warnings)
        for i, rule in enumerate(_require_list(spec.get("egress", []), "spec.egress"))
    )
    return CiliumPolicyDoc(
        api_version=api_version,
        kind=kind,
        name=name,
        namespace=namespace,
        endpoint_selector=selector,
        ingress_rules=ingress_rules,
        egress_rules=egress_rules,
        warnings=tuple(warnings),
    )


def _selector_parts(match_labels: Mapping[str, str], namespace_key_special: bool):
    """Label string (and namespace override) from a matchLabels map.

    The ``app`` value leads; any other keys are appended as sorted
    ``key=value`` pairs so unrecognized labels stay lossless.
    """
    ns_name = None
    extras = []
    for key in sorted(match_labels):
        if key == "app":
            continue
        if namespace_key_special and key == NAMESPACE_LABEL_KEY:
            ns_name = match_labels[key]
            continue
        extras.append(f"{key}={match_labels[key]}")
    parts = ([match_labels["app"]] if "app" in match_labels else []) + extras
    return (",".join(parts) if parts else None), ns_name


def expand_rules(doc: CiliumPolicyDoc) -> list[Policy]:
    """Flatten one policy document into single-pair policies.

    Each ingress rule contributes one ingress policy per (source, port):
    the selected endpoint (document namespace, selector label, the port)
    paired with the peer (a CIDR, or namespace+label from fromEndpoints).
    Each egress rule contributes one egress policy per (CIDR, port): the
    selected endpoint without a port, paired with CIDR+port.
    """
    selected_ns = Namespace(doc.namespace, DEFAULT_NAMESPACE_ID)
    selector_label, _ = _selector_parts(doc.endpoint_selector, namespace_key_special=False)

    policies: list[Policy] = []
    rule_index = 0
    for rule in doc.ingress_rules:
        origin = PolicyOrigin(doc.name, rule_index)
        peers = [Endpoint(cidr=cidr) for cidr in rule.from_cidr_set]
        for labels in rule.from_endpoints:
            label, ns_override = _selector_parts(labels, namespace_key_special=True)
            peer_ns = Namespace(ns_override or doc.namespace, DEFAULT_NAMESPACE_ID)
            peers.append(Endpoint(namespace=peer_ns, label=label))
        for peer in peers:
            for port in rule.to_ports or (None,):
                selected = Endpoint(namespace=selected_ns, port=port, label=selector_label)
                policies.append(
                    Policy(pair=(selected, peer), direction=Direction.INGRESS, origin=origin)
                )
        rule_index += 1
    for rule in doc.egress_rules:
        origin = PolicyOrigin(doc.name, rule_index)
        selected = Endpoint(namespace=selected_ns, label=selector_label)
        for cidr in rule.to_cidr_set:
            for port in rule.to_ports or (None,):
                peer = Endpoint(cidr=cidr, port=port)
                policies.append(
                    Policy(pair=(selected, peer), direction=Direction.EGRESS, origin=origin)
                )
        rule_index += 1

    if not policies:
        raise EmptyExpansion(f"policy document {doc.name!r} produced no policies")
    return policies


# --- endpoint fields in topology and scenario files -------------------------

_ENDPOINT_KEYS = {"cidr", "namespace", "port", "label"}


def _parse_endpoint_fields(data, where: str) -> Endpoint:
    data = _require_mapping(data, where)
    unknown = set(data) - _ENDPOINT_KEYS
    if unknown:
        raise MalformedYaml(f"{where}: unknown endpoint keys {sorted(unknown)}")
    cidr = None
    if data.get("cidr") is not None:
        cidr = parse_cidr(_require_str(data["cidr"], f"{where}.cidr"))
    namespace = None
    ns_value = data.get("namespace")
    if ns_value is not None:
        if isinstance(ns_value, str):
            namespace = None if ns_value == "-" else Namespace(ns_value, DEFAULT_NAMESPACE_ID)
        else:
            ns_map = _require_mapping(ns_value, f"{where}.namespace")
            unknown = set(ns_map) - {"name", "id"}
            if unknown:
                raise MalformedYaml(f"{where}.namespace: unknown keys {sorted(unknown)}")
            namespace = Namespace(
                _require_str(ns_map.get("name"), f"{where}.namespace.name"),
                ns_map.get("id", DEFAULT_NAMESPACE_ID),
            )
    port = None
    if data.get("port") is not None:
        port = data["port"]
        if isinstance(port, bool) or not isinstance(port, int):
            raise InvalidPort(f"{where}.port: must be an integer, got {port!r}")
        if port != 0:
            port = _parse_port(port, where)
    label = data.get("label")
    if label is not None and not isinstance(label, str):
        raise MalformedYaml(f"{where}.label: must be a string, got {label!r}")

    cidr, namespace, port, label = normalize_fields(cidr, namespace, port, label)
    if cidr is None and namespace is None and port is None and label is None:
        raise MalformedYaml(f"{where}: endpoint has no present fields after normalization")
    return Endpoint(cidr=cidr, namespace=namespace, port=port, label=label)


# --- topology ----------------------------------------------------------------


@dataclass(frozen=True)
class ApplicationRecord:
    """Deploy-ready application description from a topology file."""

    app_id: int
    send: Endpoint
    listen: tuple[Endpoint, ...]
    receive_only: bool
    name: Optional[str] = None


def parse_topology(text: str):
    """Parse a topology document into (named endpoints, application records)."""
    data = _require_mapping(_load_yaml(text, "topology document"), "topology document")
    unknown = set(data) - {"endpoints", "applications"}
    if unknown:
        raise MalformedYaml(f"topology: unknown keys {sorted(unknown)}")

    endpoints: dict[str, Endpoint] = {}
    for name, fields in _require_mapping(data.get("endpoints", {}), "endpoints").items():
        name = _require_str(name, "endpoint name")
        endpoints[name] = _parse_endpoint_fields(fields, f"endpoints.{name}")

    def resolve(ref, where: str) -> Endpoint:
        ref = _require_str(ref, where)
        if ref not in endpoints:
            raise UnknownEndpointReference(f"{where}: undeclared endpoint {ref!r}")
        return endpoints[ref]

    records = []
    seen_ids = set()
    for i, entry in enumerate(_require_list(data.get("applications", []), "applications")):
        where = f"applications[{i}]"
        entry = _require_mapping(entry, where)
        unknown = set(entry) - {"id", "name", "send", "listen", "receive_only"}
        if unknown:
            raise MalformedYaml(f"{where}: unknown keys {sorted(unknown)}")
        aid = entry.get("id")
        if isinstance(aid, bool) or not isinstance(aid, int) or aid < 0:
            raise MalformedYaml(f"{where}.id: must be a non-negative integer, got {aid!r}")
        if aid in seen_ids:
            raise DuplicateSymbol(f"{where}: application id {aid} declared twice")
        seen_ids.add(aid)
        listen = tuple(
            resolve(ref, f"{where}.listen[{j}]")
            for j, ref in enumerate(_require_list(entry.get("listen", []), f"{where}.listen"))
        )
        receive_only = entry.get("receive_only", False)
        if not isinstance(receive_only, bool):
            raise MalformedYaml(f"{where}.receive_only: must be a boolean")
        name = entry.get("name")
        if name is not None:
            name = _require_str(name, f"{where}.name")
        records.append(
            ApplicationRecord(
                app_id=aid,
                send=resolve(entry.get("send"), f"{where}.send"),
                listen=listen,
                receive_only=receive_only,
                name=name,
            )
        )
    return endpoints, tuple(records)


# --- scenario scripts --------------------------------------------------------

_OPERATION_FOR_ACTION = {
    "create_endpoint": "CreateEndpoint",
    "create_policy": "CreatePolicy",
    "deploy_application": "DeployApplication",
    "send_data": "SendData",
}


@dataclass(frozen=True)
class ScenarioScript:
    """Parsed scenario: resolved steps plus the mode the file declared."""

    steps: tuple[ScenarioStep, ...]
    mode: Optional[MatchMode] = None
    declared_endpoints: Optional[Mapping[str, Endpoint]] = None

    def concrete_endpoints(self) -> set[Endpoint]:
        """Endpoints the script uses as application or target endpoints
        (as opposed to policy pair members)."""
        used: set[Endpoint] = set()
        for step in self.steps:
            if step.action == "deploy_application":
                used.add(step.arguments["send"])
                used.update(step.arguments.get("listen", ()))
            elif step.action == "send_data":
                used.add(step.arguments["endpoint"])
        return used


def _parse_expectation(value, action: str, where: str) -> Expectation:
    if value is None:
        return EXPECT_OK
    if action == "send_data":
        if value == "allow":
            return EXPECT_OK
        if value == "deny":
            return Expectation(violation_of="TransferData")
        raise MalformedYaml(f"{where}.expect: must be 'allow' or 'deny', got {value!r}")
    if value == "ok":
        return EXPECT_OK
    if value == "violation":
        return Expectation(violation_of=_OPERATION_FOR_ACTION[action])
    raise MalformedYaml(f"{where}.expect: must be 'ok' or 'violation', got {value!r}")


def parse_scenario(text: str, symbols: Optional[Mapping[str, Endpoint]] = None) -> ScenarioScript:
    """Parse a scenario document into resolved, runnable steps.

    Endpoint and policy references resolve against the names declared by
    earlier create_endpoint / create_policy steps, plus any pre-declared
    symbols (e.g. the endpoint names of an already-loaded topology).
    """
    data = _require_mapping(_load_yaml(text, "scenario document"), "scenario document")
    unknown = set(data) - {"mode", "steps"}
    if unknown:
        raise MalformedYaml(f"scenario: unknown keys {sorted(unknown)}")
    mode = None
    if data.get("mode") is not None:
        try:
            mode = MatchMode(data["mode"])
        except ValueError:
            raise MalformedYaml(f"scenario: mode must be 'strict' or 'semantic', got {data['mode']!r}")

    endpoints: dict[str, Endpoint] = dict(symbols or {})
    policies: dict[str, Policy] = {}

    def declare(name, value, where: str):
        name = _require_str(name, f"{where}.name")
        if name in endpoints or name in policies:
            raise DuplicateSymbol(f"{where}: symbol {name!r} declared twice")
        return name, value

    def resolve_endpoint(ref, where: str) -> Endpoint:
        ref = _require_str(ref, where)
        if ref not in endpoints:
            raise UnknownEndpointReference(f"{where}: undeclared endpoint {ref!r}")
        return endpoints[ref]

    def resolve_policy(ref, where: str) -> Policy:
        ref = _require_str(ref, where)
        if ref not in policies:
            raise UnknownEndpointReference(f"{where}: undeclared policy {ref!r}")
        return policies[ref]

    def require_app_id(value, where: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise MalformedYaml(f"{where}: must be a non-negative integer, got {value!r}")
        return value

    steps = []
    for i, raw in enumerate(_require_list(data.get("steps"), "steps")):
        where = f"steps[{i}]"
        raw = _require_mapping(raw, where)
        if len(raw) != 1:
            raise MalformedYaml(f"{where}: step must have exactly one action key")
        action, body = next(iter(raw.items()))
        if action not in _OPERATION_FOR_ACTION:
            raise MalformedYaml(f"{where}: unknown action {action!r}")
        body = _require_mapping(body, f"{where}.{action}")
        expected = _parse_expectation(body.get("expect"), action, where)

        if action == "create_endpoint":
            allowed = _ENDPOINT_KEYS | {"name", "expect"}
            unknown = set(body) - allowed
            if unknown:
                raise MalformedYaml(f"{where}: unknown keys {sorted(unknown)}")
            fields = {k: body[k] for k in _ENDPOINT_KEYS if k in body}
            ep = _parse_endpoint_fields(fields, where)
            name, _ = declare(body.get("name"), ep, where)
            endpoints[name] = ep
            args = {"name": name, "cidr": ep.cidr, "namespace": ep.namespace,
                    "port": ep.port, "label": ep.label}
        elif action == "create_policy":
            unknown = set(body) - {"name", "first", "second", "direction", "expect"}
            if unknown:
                raise MalformedYaml(f"{where}: unknown keys {sorted(unknown)}")
            direction = body.get("direction")
            if isinstance(direction, bool) or direction not in (0, 1):
                raise MalformedYaml(f"{where}.direction: must be 0 or 1, got {direction!r}")
            first = resolve_endpoint(body.get("first"), f"{where}.first")
            second = resolve_endpoint(body.get("second"), f"{where}.second")
            policy = Policy(pair=(first, second), direction=Direction(direction))
            name, _ = declare(body.get("name"), policy, where)
            policies[name] = policy
            args = {"name": name, "first": first, "second": second,
                    "direction": Direction(direction)}
        elif action == "deploy_application":
            unknown = set(body) - {"id", "send", "listen", "receive_only", "policies", "expect"}
            if unknown:
                raise MalformedYaml(f"{where}: unknown keys {sorted(unknown)}")
            listen = tuple(
                resolve_endpoint(ref, f"{where}.listen[{j}]")
                for j, ref in enumerate(_require_list(body.get("listen", []), f"{where}.listen"))
            )
            pols = tuple(
                resolve_policy(ref, f"{where}.policies[{j}]")
                for j, ref in enumerate(_require_list(body.get("policies", []), f"{where}.policies"))
            )
            receive_only = body.get("receive_only", False)
            if not isinstance(receive_only, bool):
                raise MalformedYaml(f"{where}.receive_only: must be a boolean")
            args = {
                "id": require_app_id(body.get("id"), f"{where}.id"),
                "send": resolve_endpoint(body.get("send"), f"{where}.send"),
                "listen": listen,
                "receive_only": receive_only,
                "policies": pols,
            }
        else:  # send_data
            unknown = set(body) - {"from", "to", "endpoint", "expect"}
            if unknown:
                raise MalformedYaml(f"{where}: unknown keys {sorted(unknown)}")
            args = {
                "from": require_app_id(body.get("from"), f"{where}.from"),
                "to": require_app_id(body.get("to"), f"{where}.to"),
                "endpoint": resolve_endpoint(body.get("endpoint"), f"{where}.endpoint"),
            }
        steps.append(ScenarioStep(action=action, arguments=args, expected=expected))

    return ScenarioScript(steps=tuple(steps), mode=mode, declared_endpoints=dict(endpoints))


# --- assembling systems and canonical policy dumps ---------------------------


def assemble_state(policies: Sequence[Policy] = (), topology=None):
    """Build a system from ingested parts.

    Registers topology endpoints, deploys its applications, then installs
    the policies (set semantics, structural duplicates collapse).  Returns
    (state, {app_id: display name}).
    """
    state = new_system()
    names: dict[int, str] = {}
    if topology is not None:
        endpoints, records = topology
        for ep in endpoints.values():
            state, _ = create_endpoint(state, ep.cidr, ep.namespace, ep.port, ep.label)
        for record in records:
            state = deploy_application(
                state, record.app_id, record.send, record.listen, record.receive_only
            )
            if record.name is not None:
                names[record.app_id] = record.name
    if policies:
        state = replace(state, policies=state.policies | frozenset(policies))
    return state, names


def non_host_cidr_endpoints(endpoints) -> list[Endpoint]:
    """Concrete endpoints whose CIDR is not a /32 host address.

    Semantic mode matches a single concrete address against policy
    blocks, so application and target endpoints must be hosts.
    """
    return sorted(
        (ep for ep in endpoints if ep.cidr is not None and ep.cidr.sig_bits != 32),
        key=canonical_endpoint_text,
    )


def policies_to_text(policies: Sequence[Policy]) -> str:
    """Canonical serialization of policies (deterministic field order)."""
    return json.dumps(
        {"policies": [policy_to_dict(p) for p in policies]}, sort_keys=True, indent=2
    ) + "\n"


def policies_from_text(text: str) -> list[Policy]:
    """Inverse of policies_to_text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedYaml(f"policy dump: {exc}") from exc
    if not isinstance(data, Mapping) or "policies" not in data:
        raise MalformedYaml("policy dump: expected an object with a 'policies' list")
    return [policy_from_dict(d) for d in _require_list(data["policies"], "policies")]
