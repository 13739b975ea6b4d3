from ringjsa.config import load_config
from ringjsa.doc import describe
from ringjsa.pipeline import derived

if __name__ == "__main__":
    cfg = load_config(defaults="pulsed")
    print(describe(cfg.to_dict(), derived(cfg)))
