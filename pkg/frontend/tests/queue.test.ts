import { describe, expect, it } from "vitest";

import { ActionQueue, ServiceRejection, ServiceUnreachable } from "../src/api.js";

const instant = () => Promise.resolve();

describe("ActionQueue", () => {
  it("runs actions strictly one at a time, in order", async () => {
    const queue = new ActionQueue(1, Infinity, instant);
    const log: string[] = [];
    const make = (name: string) => async () => {
      log.push(`start ${name}`);
      await instant();
      log.push(`end ${name}`);
      return name;
    };
    const results = await Promise.all([queue.push(make("a")), queue.push(make("b")), queue.push(make("c"))]);
    expect(results).toEqual(["a", "b", "c"]);
    expect(log).toEqual(["start a", "end a", "start b", "end b", "start c", "end c"]);
  });

  it("retries an unsent action until the service answers", async () => {
    const queue = new ActionQueue(1, Infinity, instant);
    let attempts = 0;
    const result = await queue.push(async () => {
      attempts += 1;
      if (attempts < 3) throw new ServiceUnreachable("down");
      return "ok";
    });
    expect(result).toBe("ok");
    expect(attempts).toBe(3);
  });

  it("never replays an acknowledged action", async () => {
    const queue = new ActionQueue(1, Infinity, instant);
    let runs = 0;
    await queue.push(async () => {
      runs += 1;
      return "done";
    });
    await queue.push(async () => "later");
    expect(runs).toBe(1);
  });

  it("treats a service rejection as acknowledged: no retry", async () => {
    const queue = new ActionQueue(1, Infinity, instant);
    let attempts = 0;
    await expect(
      queue.push(async () => {
        attempts += 1;
        throw new ServiceRejection("label_not_offered", "nope", 400);
      }),
    ).rejects.toBeInstanceOf(ServiceRejection);
    expect(attempts).toBe(1);
  });

  it("a failing head does not lose queued followers", async () => {
    const queue = new ActionQueue(1, Infinity, instant);
    let headAttempts = 0;
    const head = queue.push(async () => {
      headAttempts += 1;
      if (headAttempts < 2) throw new ServiceUnreachable("down");
      return "head";
    });
    const follower = queue.push(async () => "follower");
    expect(await head).toBe("head");
    expect(await follower).toBe("follower");
  });

  it("bounded retries eventually surface the outage", async () => {
    const queue = new ActionQueue(1, 2, instant);
    let attempts = 0;
    await expect(
      queue.push(async () => {
        attempts += 1;
        throw new ServiceUnreachable("down");
      }),
    ).rejects.toBeInstanceOf(ServiceUnreachable);
    expect(attempts).toBe(3); // first try + two retries
  });
});
