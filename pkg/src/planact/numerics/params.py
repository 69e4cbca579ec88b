"""Named parameter container with per-entry freeze flags."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class ParameterStore:
    """Ordered map name -> Tensor; frozen entries are never touched by optimizers.

    Gradients still flow *through* frozen tensors (they participate in the
    graph); freezing only controls whether an optimizer may apply updates.
    """

    def __init__(self):
        self._entries: dict[str, Tensor] = {}
        self._frozen: set[str] = set()

    def add(self, name: str, array: np.ndarray, trainable: bool = True) -> Tensor:
        if name in self._entries:
            raise KeyError(f"duplicate parameter name: {name}")
        t = Tensor(np.asarray(array), requires_grad=True)
        self._entries[name] = t
        if not trainable:
            self._frozen.add(name)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> list[str]:
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def is_frozen(self, name: str) -> bool:
        return name in self._frozen

    def freeze(self, names) -> None:
        for n in ([names] if isinstance(names, str) else names):
            if n not in self._entries:
                raise KeyError(f"unknown parameter: {n}")
            self._frozen.add(n)

    def unfreeze(self, names) -> None:
        for n in ([names] if isinstance(names, str) else names):
            self._frozen.discard(n)

    def freeze_all(self) -> None:
        self._frozen = set(self._entries)

    def unfreeze_all(self) -> None:
        self._frozen = set()

    def trainable_names(self) -> list[str]:
        return [n for n in self._entries if n not in self._frozen]

    def zero_grad(self) -> None:
        for t in self._entries.values():
            t.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {n: t.data.copy() for n, t in self._entries.items()}

    def load_state(self, state: dict[str, np.ndarray], strict: bool = True) -> None:
        from .tensor import ShapeMismatch

        for n, arr in state.items():
            if n not in self._entries:
                if strict:
                    raise KeyError(f"unexpected parameter in state: {n}")
                continue
            t = self._entries[n]
            if t.data.shape != arr.shape:
                raise ShapeMismatch(
                    f"parameter {n}: stored shape {arr.shape} != model shape {t.data.shape}")
            t.data = arr.astype(t.data.dtype).copy()
        if strict:
            missing = [n for n in self._entries if n not in state]
            if missing:
                raise KeyError(f"state missing parameters: {missing[:5]}{'...' if len(missing) > 5 else ''}")
