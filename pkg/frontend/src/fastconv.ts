/**
 * Stride-1 same-padding 2D convolution with custom gradients.
 *
 * The pure-JS CPU backend's Conv2DBackpropInput/Filter kernels are an order
 * of magnitude slower than its forward conv kernel, which makes training
 * unusable. Both backward passes are themselves convolutions, so this layer
 * registers a custom gradient that computes them with forward conv2d calls:
 *
 *   dX = conv2d(dY, W flipped spatially with in/out channels swapped)
 *   dW = conv2d(X as a channel-major batch, dY as a filter)
 *
 * Numerically identical to the built-in gradient (the tests check both
 * against finite differences); only the kernel choice differs.
 */

import * as tf from '@tensorflow/tfjs';

type GradSave = (tensors: tf.Tensor[]) => void;

export function convWithFastGrad(
  x: tf.Tensor4D,
  kernel: tf.Tensor4D,
): tf.Tensor4D {
  const fn = (xi: tf.Tensor, ki: tf.Tensor, save: GradSave) => {
    const xT = xi as tf.Tensor4D;
    const kT = ki as tf.Tensor4D;
    save([xT, kT]);
    const value = tf.conv2d(xT, kT, 1, 'same');
    const gradFunc = (dy: tf.Tensor, saved: tf.Tensor[]) => {
      const [xs, ks] = saved as [tf.Tensor4D, tf.Tensor4D];
      const dyT = dy as tf.Tensor4D;
      return [inputGrad(dyT, ks), filterGrad(xs, dyT, ks)];
    };
    return { value, gradFunc };
  };
  const runner = tf.customGrad(fn as Parameters<typeof tf.customGrad>[0]);
  return runner(x, kernel) as tf.Tensor4D;
}

/** dX for stride-1 same-pad conv: full-pad dY, convolve with rotated kernel. */
function inputGrad(dy: tf.Tensor4D, kernel: tf.Tensor4D): tf.Tensor4D {
  return tf.tidy(() => {
    const [kh, kw] = [kernel.shape[0], kernel.shape[1]];
    const padTop = kh - 1 - Math.floor((kh - 1) / 2);
    const padLeft = kw - 1 - Math.floor((kw - 1) / 2);
    const padded = tf.pad(dy, [
      [0, 0],
      [padTop, kh - 1 - padTop],
      [padLeft, kw - 1 - padLeft],
      [0, 0],
    ]);
    // Rotate 180 degrees spatially and swap the channel axes.
    const rotated = tf.transpose(
      tf.reverse(kernel, [0, 1]),
      [0, 1, 3, 2],
    ) as tf.Tensor4D;
    return tf.conv2d(padded, rotated, 1, 'valid');
  });
}

/**
 * dW for stride-1 same-pad conv, done as a conv of X by dY: channels of X
 * become the batch, the batch becomes channels, and dY acts as the filter.
 */
function filterGrad(
  x: tf.Tensor4D,
  dy: tf.Tensor4D,
  kernel: tf.Tensor4D,
): tf.Tensor4D {
  return tf.tidy(() => {
    const [kh, kw] = [kernel.shape[0], kernel.shape[1]];
    const padTop = Math.floor((kh - 1) / 2);
    const padLeft = Math.floor((kw - 1) / 2);
    const padded = tf.pad(x, [
      [0, 0],
      [padTop, kh - 1 - padTop],
      [padLeft, kw - 1 - padLeft],
      [0, 0],
    ]);
    const xAsBatch = tf.transpose(padded, [3, 1, 2, 0]) as tf.Tensor4D;
    const dyAsFilter = tf.transpose(dy, [1, 2, 0, 3]) as tf.Tensor4D;
    const raw = tf.conv2d(xAsBatch, dyAsFilter, 1, 'valid'); // (Cin, kh, kw, Cout)
    return tf.transpose(raw, [1, 2, 0, 3]) as tf.Tensor4D;
  });
}

export interface FastConvArgs {
  filters: number;
  kernelSize: [number, number];
  seed: number;
  name: string;
}

/** Conv2D layer (stride 1, same padding, bias) built on the fast gradient. */
export class FastConv2D extends tf.layers.Layer {
  static className = 'FastConv2D';

  private filters: number;
  private kernelSize: [number, number];
  private seed: number;
  private kernel!: ReturnType<tf.layers.Layer['addWeight']>;
  private bias!: ReturnType<tf.layers.Layer['addWeight']>;

  constructor(args: FastConvArgs) {
    super({ name: args.name });
    this.filters = args.filters;
    this.kernelSize = args.kernelSize;
    this.seed = args.seed;
  }

  override build(inputShape: tf.Shape | tf.Shape[]): void {
    const shape = inputShape as tf.Shape;
    const inChannels = shape[3] as number;
    this.kernel = this.addWeight(
      'kernel',
      [this.kernelSize[0], this.kernelSize[1], inChannels, this.filters],
      'float32',
      tf.initializers.heNormal({ seed: this.seed }),
    );
    this.bias = this.addWeight(
      'bias',
      [this.filters],
      'float32',
      tf.initializers.zeros(),
    );
    this.built = true;
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    return tf.tidy(() => {
      const x = (Array.isArray(inputs) ? inputs[0] : inputs) as tf.Tensor4D;
      const out = convWithFastGrad(x, this.kernel.read() as tf.Tensor4D);
      return tf.add(out, this.bias.read());
    });
  }

  override computeOutputShape(inputShape: tf.Shape | tf.Shape[]): tf.Shape {
    const shape = inputShape as tf.Shape;
    return [shape[0], shape[1], shape[2], this.filters];
  }

  override getConfig(): tf.serialization.ConfigDict {
    return {
      ...super.getConfig(),
      filters: this.filters,
      kernelSize: this.kernelSize,
      seed: this.seed,
    };
  }

  static override fromConfig<T extends tf.serialization.Serializable>(
    cls: tf.serialization.SerializableConstructor<T>,
    config: tf.serialization.ConfigDict,
  ): T {
    return new cls({
      filters: config['filters'],
      kernelSize: config['kernelSize'],
      seed: config['seed'],
      name: config['name'],
    } as unknown as FastConvArgs);
  }
}

tf.serialization.registerClass(FastConv2D);
