"""Reference cache key: SHA-256 of compact, key-sorted JSON of the request."""
import hashlib
import json

req = {
    "model": "sales-agent",
    "messages": [{"role": "system", "content": "Be brief."}, {"role": "user", "content": "Hi there"}],
    "temperature": 0.7,
    "max_tokens": 256,
    "stop": ["\n\n"],
    "seed": 42,
}
text = json.dumps(req, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
print(hashlib.sha256(text.encode()).hexdigest())
