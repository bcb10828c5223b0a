from mpmath import mp

from znkz import cache
from znkz import config as znkz_config


def test_cache_key_is_deterministic():
    assert cache.get_cache_key("a", 1, "b") == cache.get_cache_key("a", 1, "b")
    assert cache.get_cache_key("a", 1) != cache.get_cache_key("a", 2)


def test_memory_cache():
    cache.clear_cache()
    key = cache.get_cache_key("memory", 1)
    assert cache.get_cached_moments(key) is None
    cache.save_moments(key, [mp.mpc(1, 2)])
    assert cache.get_cached_moments(key) == [mp.mpc(1, 2)]
    cache.clear_cache()
    assert cache.get_cached_moments(key) is None


def test_disk_cache_survives_memory_clear(tmp_path, monkeypatch):
    monkeypatch.setattr(znkz_config, "CACHE_DIR", str(tmp_path / "moments"))
    cache.enable_disk_cache(True)
    try:
        key = cache.get_cache_key("disk", 1)
        with mp.workprec(128):
            value = mp.mpc(mp.mpf(1) / 3, -2)
            cache.save_moments(key, [value])
            cache.clear_cache()
            restored = cache.get_cached_moments(key)
            assert abs(restored[0] - value) < mp.mpf(10) ** -35
        cache.clear_cache(disk=True)
        assert not (tmp_path / "moments").exists()
    finally:
        cache.enable_disk_cache(False)


def test_memory_cache_drops_least_recently_used(monkeypatch):
    monkeypatch.setattr(znkz_config, "MEMORY_CACHE_LIMIT", 2)
    cache.clear_cache()
    keys = [cache.get_cache_key("lru", k) for k in range(3)]
    cache.save_moments(keys[0], [mp.mpc(0)])
    cache.save_moments(keys[1], [mp.mpc(1)])
    assert cache.get_cached_moments(keys[0]) == [mp.mpc(0)]
    cache.save_moments(keys[2], [mp.mpc(2)])
    assert cache.cache_size() == 2
    assert cache.get_cached_moments(keys[1]) is None
    assert cache.get_cached_moments(keys[0]) == [mp.mpc(0)]
    assert cache.get_cached_moments(keys[2]) == [mp.mpc(2)]
    cache.clear_cache()
