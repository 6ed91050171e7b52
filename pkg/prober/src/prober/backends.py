"""Model backends.

A backend owns tokenization and the forward pass; the probe pipeline
only sees two operations: teacher-forced log-probabilities of a
reference continuation, and text generation from a prompt. A prompt
plus reference that does not fit the model's context window raises
ContextOverflow, which the pipeline records as a skip.

`tiny:<seed>` names a small randomly initialized byte-level model that
needs no downloads and is deterministic for a given seed. Any other
model string is treated as a Hugging Face model id.
"""

from __future__ import annotations

from typing import Protocol

from .tasks import Decoding, ProbeError


class ContextOverflow(Exception):
    """Prompt plus reference exceeds the model's context window."""


class Backend(Protocol):
    def reference_logprobs(self, prompt: str, reference: str) -> list[float]:
        """Per-token log-probabilities of the reference given the prompt.

        Prompt positions are conditioned on, never scored; the returned
        list has one entry per reference token.
        """
        ...

    def generate(self, prompt: str, decoding: Decoding) -> str:
        ...


class StaticBackend:
    """Canned responses keyed by prompt, for tests.

    logprobs: prompt -> per-token log-probabilities of its reference.
    generations: prompt -> generated text.
    overflow: prompts that simulate a context-window overflow.
    """

    def __init__(
        self,
        logprobs: dict[str, list[float]] | None = None,
        generations: dict[str, str] | None = None,
        overflow: set[str] | None = None,
    ) -> None:
        self._logprobs = dict(logprobs or {})
        self._generations = dict(generations or {})
        self._overflow = set(overflow or ())

    def reference_logprobs(self, prompt: str, reference: str) -> list[float]:
        if prompt in self._overflow:
            raise ContextOverflow(f"static overflow for prompt {prompt!r}")
        if prompt not in self._logprobs:
            raise ProbeError(f"no canned logprobs for prompt {prompt!r}")
        return list(self._logprobs[prompt])

    def generate(self, prompt: str, decoding: Decoding) -> str:
        if prompt not in self._generations:
            raise ProbeError(f"no canned generation for prompt {prompt!r}")
        return self._generations[prompt]


class TorchCausalBackend:
    """Causal LM scored one sample at a time on CPU.

    Single-sample forwards keep results independent of how the caller
    chunks the dataset into batches.
    """

    def __init__(self, model, tokenizer_encode, tokenizer_decode, n_positions: int, seed: int = 0) -> None:
        import torch

        self._torch = torch
        self._model = model.eval()
        self._encode = tokenizer_encode
        self._decode = tokenizer_decode
        self._n_positions = int(n_positions)
        self._rng = torch.Generator().manual_seed(seed)

    def reference_logprobs(self, prompt: str, reference: str) -> list[float]:
        torch = self._torch
        prompt_ids = self._encode(prompt)
        ref_ids = self._encode(reference)
        if not prompt_ids:
            raise ProbeError("empty prompt after tokenization")
        if not ref_ids:
            raise ProbeError("empty reference after tokenization")
        total = len(prompt_ids) + len(ref_ids)
        if total > self._n_positions:
            raise ContextOverflow(
                f"{total} tokens exceed context window of {self._n_positions}"
            )
        ids = torch.tensor([prompt_ids + ref_ids], dtype=torch.long)
        with torch.no_grad():
            logits = self._model(ids).logits[0]
        # Position i predicts token i+1, so reference token j (at input
        # index len(prompt)+j) is scored by the row at len(prompt)+j-1.
        rows = logits[len(prompt_ids) - 1 : total - 1]
        logprobs = torch.log_softmax(rows.double(), dim=-1)
        picked = logprobs[torch.arange(len(ref_ids)), torch.tensor(ref_ids)]
        return [float(v) for v in picked]

    def generate(self, prompt: str, decoding: Decoding) -> str:
        torch = self._torch
        ids = self._encode(prompt)
        if not ids:
            raise ProbeError("empty prompt after tokenization")
        if len(ids) >= self._n_positions:
            raise ContextOverflow(
                f"{len(ids)} prompt tokens leave no room in context window of {self._n_positions}"
            )
        out: list[int] = []
        with torch.no_grad():
            for _ in range(decoding.max_new_tokens):
                if len(ids) + len(out) >= self._n_positions:
                    break
                current = torch.tensor([ids + out], dtype=torch.long)
                logits = self._model(current).logits[0, -1]
                if decoding.greedy:
                    nxt = int(torch.argmax(logits))
                else:
                    probs = torch.softmax(logits.double() / decoding.temperature, dim=-1)
                    nxt = int(torch.multinomial(probs, 1, generator=self._rng))
                out.append(nxt)
        return self._decode(out)


def _byte_encode(text: str) -> list[int]:
    return list(text.encode("utf-8"))


def _byte_decode(ids: list[int]) -> str:
    return bytes(ids).decode("utf-8", errors="replace")


def _tiny_byte_backend(seed: int) -> TorchCausalBackend:
    import torch
    from transformers import GPT2Config, GPT2LMHeadModel

    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=256,
        n_positions=512,
        n_embd=64,
        n_layer=2,
        n_head=2,
        bos_token_id=None,
        eos_token_id=None,
    )
    model = GPT2LMHeadModel(config)
    return TorchCausalBackend(model, _byte_encode, _byte_decode, config.n_positions, seed=seed)


def _hf_backend(model_id: str) -> TorchCausalBackend:
    try:
        from transformers import AutoModelForCausalLM, AutoTokenizer
    except ImportError as exc:
        raise ProbeError(f"transformers unavailable: {exc}") from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModelForCausalLM.from_pretrained(model_id)
    except Exception as exc:
        raise ProbeError(f"could not load model {model_id!r}: {exc}") from exc
    n_positions = int(getattr(model.config, "n_positions", None) or getattr(model.config, "max_position_embeddings", 1024))

    def encode(text: str) -> list[int]:
        return tokenizer.encode(text, add_special_tokens=False)

    return TorchCausalBackend(model, encode, tokenizer.decode, n_positions)


def build_backend(model: str) -> Backend:
    """Resolve a model string to a backend.

    "tiny:<seed>" builds the self-contained byte-level model; anything
    else is loaded from Hugging Face and raises ProbeError on failure.
    """
    if model.startswith("tiny:"):
        tail = model[len("tiny:"):]
        try:
            seed = int(tail)
        except ValueError:
            raise ProbeError(f"bad tiny model seed: {tail!r}") from None
        return _tiny_byte_backend(seed)
    return _hf_backend(model)
