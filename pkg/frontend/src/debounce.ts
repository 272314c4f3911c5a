/* Trailing-edge debounce: a burst of calls collapses into one invocation
   of the latest arguments, `waitMs` after the burst goes quiet. Used to
   keep a typing burst from fanning out into one completion request per
   keystroke. */

export interface Debounced<A extends unknown[]> {
  (...args: A): void;
  /** Run a pending invocation immediately (no-op when idle). */
  flush(): void;
  /** Drop a pending invocation without running it. */
  cancel(): void;
}

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): Debounced<A> {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let pending: A | null = null;

  const fire = () => {
    timer = null;
    if (pending !== null) {
      const args = pending;
      pending = null;
      fn(...args);
    }
  };

  const debounced = (...args: A) => {
    pending = args;
    if (timer !== null) clearTimeout(timer);
    timer = setTimeout(fire, waitMs);
  };
  debounced.flush = () => {
    if (timer !== null) {
      clearTimeout(timer);
      fire();
    }
  };
  debounced.cancel = () => {
    if (timer !== null) clearTimeout(timer);
    timer = null;
    pending = null;
  };
  return debounced;
}
